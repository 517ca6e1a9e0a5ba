import { execFileSync } from "child_process";
import { mkdtempSync, readFileSync, writeFileSync, cpSync, existsSync } from "fs";
import { tmpdir } from "os";
import path from "path";
import { describe, expect, it } from "vitest";

import { FIGURE_KINDS, render } from "../src/figures.js";
import { toPNG } from "../src/raster.js";
import { fmt, toSVG } from "../src/scene.js";
import { SchemaError, loadRun, parseRecords } from "../src/schema.js";

const FIXTURES = path.join(__dirname, "fixtures");
const CLI = path.join(__dirname, "..", "dist", "cli.js");

describe("artifact loading", () => {
  it("loads a complete run directory", () => {
    const run = loadRun(path.join(FIXTURES, "scaling"));
    expect(run.manifest.schema_version).toBe(1);
    expect(run.manifest.config.kind).toBe("scaling");
    expect(run.records.length).toBeGreaterThan(100);
  });

  it("refuses a schema-bumped manifest", () => {
    const dir = mkdtempSync(path.join(tmpdir(), "lfpp-plot-"));
    cpSync(path.join(FIXTURES, "scaling"), dir, { recursive: true });
    const mpath = path.join(dir, "manifest.json");
    const manifest = JSON.parse(readFileSync(mpath, "utf-8"));
    manifest.schema_version = 2;
    writeFileSync(mpath, JSON.stringify(manifest));
    expect(() => loadRun(dir)).toThrow(SchemaError);
    expect(() => loadRun(dir)).toThrow(/newer than supported/);
  });

  it("rejects column drift with a diff in the message", () => {
    expect(() => parseRecords("a,b,c\n1,2,3\n")).toThrow(/columns \[a,b,c\]/);
  });

  it("rejects empty records", () => {
    expect(() =>
      parseRecords("kind,parameters,replicate,statistic,value,seed\n"),
    ).toThrow(/no data rows/);
  });

  it("parses censored values", () => {
    const rows = parseRecords(
      "kind,parameters,replicate,statistic,value,seed\n" +
        "tail,r=0.1,0,x,censored,1\n",
    );
    expect(rows[0].value).toBe("censored");
    expect(rows[0].parameters.r).toBe("0.1");
  });
});

describe("figures", () => {
  for (const kind of FIGURE_KINDS) {
    it(`renders ${kind} deterministically`, () => {
      const run = loadRun(path.join(FIXTURES, kind));
      const svg1 = toSVG(render(kind, run));
      const svg2 = toSVG(render(kind, run));
      expect(svg1).toBe(svg2);
      expect(svg1.startsWith("<svg ")).toBe(true);
      expect(svg1.length).toBeGreaterThan(2000);
    });
  }

  it("refuses a mismatched kind", () => {
    const run = loadRun(path.join(FIXTURES, "scaling"));
    expect(() => render("bridge", run)).toThrow(/holds kind 'scaling'/);
  });

  it("overlays the stored scaling fit, not a refit", () => {
    const run = loadRun(path.join(FIXTURES, "scaling"));
    const svg = toSVG(render("scaling", run));
    const anyXi = Object.keys(run.summary.fits)[0];
    const q = run.summary.fits[anyXi].q_hat as number;
    expect(svg).toContain(`Q=${q.toFixed(3)}`);
  });

  it("puts the model-selection verdict in the modulus caption", () => {
    const run = loadRun(path.join(FIXTURES, "modulus"));
    const svg = toSVG(render("modulus", run));
    expect(svg).toContain(`model selected: ${run.summary.model_selected}`);
  });
});

describe("png backend", () => {
  it("emits a valid, deterministic PNG", () => {
    const run = loadRun(path.join(FIXTURES, "maxstats"));
    const scene = render("maxstats", run);
    const png1 = toPNG(scene);
    const png2 = toPNG(scene);
    expect(png1.equals(png2)).toBe(true);
    expect([...png1.subarray(0, 8)]).toEqual([0x89, 0x50, 0x4e, 0x47, 0x0d,
                                              0x0a, 0x1a, 0x0a]);
    expect(png1.subarray(12, 16).toString("ascii")).toBe("IHDR");
    expect(png1.readUInt32BE(16)).toBe(scene.width);
    expect(png1.readUInt32BE(20)).toBe(scene.height);
  });
});

describe("number formatting", () => {
  it("normalizes negative zero", () => {
    expect(fmt(-0.0001)).toBe("0.00");
    expect(fmt(3.14159)).toBe("3.14");
  });
});

describe("cli", () => {
  const run = (args: string[]) => {
    try {
      const out = execFileSync("node", [CLI, ...args],
                               { encoding: "utf-8", stdio: "pipe" });
      return { code: 0, out };
    } catch (e: any) {
      return { code: e.status as number, out: String(e.stderr) };
    }
  };

  it("renders every kind as byte-stable svg", () => {
    for (const kind of FIGURE_KINDS) {
      const dir = mkdtempSync(path.join(tmpdir(), "lfpp-cli-"));
      const out1 = path.join(dir, "a.svg");
      const out2 = path.join(dir, "b.svg");
      expect(run([path.join(FIXTURES, kind), "--kind", kind,
                  "--out", out1]).code).toBe(0);
      expect(run([path.join(FIXTURES, kind), "--kind", kind,
                  "--out", out2]).code).toBe(0);
      expect(readFileSync(out1)).toEqual(readFileSync(out2));
    }
  });

  it("writes png when asked", () => {
    const dir = mkdtempSync(path.join(tmpdir(), "lfpp-cli-"));
    const out = path.join(dir, "fig.png");
    const res = run([path.join(FIXTURES, "bridge"), "--kind", "bridge",
                     "--out", out, "--format", "png"]);
    expect(res.code).toBe(0);
    expect(existsSync(out)).toBe(true);
  });

  it("exits 3 on schema mismatch without writing a file", () => {
    const dir = mkdtempSync(path.join(tmpdir(), "lfpp-cli-"));
    cpSync(path.join(FIXTURES, "tail"), dir, { recursive: true });
    const mpath = path.join(dir, "manifest.json");
    const manifest = JSON.parse(readFileSync(mpath, "utf-8"));
    manifest.schema_version = 99;
    writeFileSync(mpath, JSON.stringify(manifest));
    const out = path.join(dir, "fig.svg");
    const res = run([dir, "--kind", "tail", "--out", out]);
    expect(res.code).toBe(3);
    expect(res.out).toMatch(/schema/);
    expect(existsSync(out)).toBe(false);
  });

  it("exits 2 on bad usage", () => {
    expect(run(["--kind", "tail"]).code).toBe(2);
    expect(run([FIXTURES, "--kind", "nope", "--out", "x.svg"]).code).toBe(2);
  });
});
