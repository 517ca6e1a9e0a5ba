/**
 * plot <results_dir> --kind <k> --out <file> [--format svg|png]
 *
 * Renders one figure from a completed lfpp-lab run directory.  Refuses
 * schema versions newer than it understands and never recomputes statistics.
 */
import { writeFileSync } from "fs";
import { pathToFileURL } from "url";
import { FIGURE_KINDS, FigureKind, render } from "./figures.js";
import { toPNG } from "./raster.js";
import { toSVG } from "./scene.js";
import { SchemaError, loadRun } from "./schema.js";

interface Args {
  dir: string;
  kind: FigureKind;
  out: string;
  format: "svg" | "png";
}

function parseArgs(argv: string[]): Args {
  let dir: string | undefined;
  let kind: string | undefined;
  let out: string | undefined;
  let format = "svg";
  for (let i = 0; i < argv.length; i++) {
    const a = argv[i];
    if (a === "--kind") kind = argv[++i];
    else if (a === "--out") out = argv[++i];
    else if (a === "--format") format = argv[++i];
    else if (!a.startsWith("-") && dir === undefined) dir = a;
    else throw new Error(`unexpected argument ${a}`);
  }
  if (!dir || !kind || !out) {
    throw new Error(
      "usage: plot <results_dir> --kind <" + FIGURE_KINDS.join("|") +
        "> --out <file> [--format svg|png]",
    );
  }
  if (!(FIGURE_KINDS as readonly string[]).includes(kind)) {
    throw new Error(`unknown kind '${kind}'; expected ${FIGURE_KINDS.join("|")}`);
  }
  if (format !== "svg" && format !== "png") {
    throw new Error(`unknown format '${format}'`);
  }
  return { dir, kind: kind as FigureKind, out, format: format as "svg" | "png" };
}

export function main(argv: string[]): number {
  let args: Args;
  try {
    args = parseArgs(argv);
  } catch (e) {
    console.error((e as Error).message);
    return 2;
  }
  try {
    const run = loadRun(args.dir);
    const scene = render(args.kind, run);
    if (args.format === "svg") {
      writeFileSync(args.out, toSVG(scene));
    } else {
      writeFileSync(args.out, toPNG(scene));
    }
    console.log(args.out);
    return 0;
  } catch (e) {
    if (e instanceof SchemaError) {
      console.error(`schema error: ${e.message}`);
      return 3;
    }
    console.error((e as Error).message);
    return 1;
  }
}

if (process.argv[1] && import.meta.url === pathToFileURL(process.argv[1]).href) {
  process.exit(main(process.argv.slice(2)));
}
