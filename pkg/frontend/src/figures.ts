/**
 * The five figure kinds, each a pure function from run artifacts to a scene.
 * Figures display stored fits from summary.json and never recompute them;
 * raw record values appear only as scatter/histogram presentation.
 */
import {
  PALETTE, Scene, caption, legend, makeFrame, niceAxis,
} from "./scene.js";
import { RecordRow, RunArtifacts, SchemaError } from "./schema.js";

export const FIGURE_KINDS = ["scaling", "maxstats", "bridge", "tail",
                             "modulus"] as const;
export type FigureKind = (typeof FIGURE_KINDS)[number];

const W = 640;
const H = 440;

export function render(kind: FigureKind, run: RunArtifacts): Scene {
  if (run.manifest.config.kind !== kind) {
    throw new SchemaError(
      `results dir holds kind '${run.manifest.config.kind}', not '${kind}'`);
  }
  switch (kind) {
    case "scaling":
      return scalingFigure(run);
    case "maxstats":
      return maxstatsFigure(run);
    case "bridge":
      return bridgeFigure(run);
    case "tail":
      return tailFigure(run);
    case "modulus":
      return modulusFigure(run);
  }
}

function groupBy(rows: RecordRow[], key: (r: RecordRow) => string):
    Map<string, RecordRow[]> {
  const m = new Map<string, RecordRow[]>();
  for (const r of rows) {
    const k = key(r);
    const arr = m.get(k);
    if (arr) {
      arr.push(r);
    } else {
      m.set(k, [r]);
    }
  }
  return m;
}

// ---------------------------------------------------------------------------

function scalingFigure(run: RunArtifacts): Scene {
  const scene: Scene = { width: W, height: H, prims: [] };
  const fits = run.summary.fits as Record<string, {
    q_hat: number; q_stderr: number; slope: number; intercept: number;
    medians: number[]; eps_grid: number[];
  }>;
  const xis = Object.keys(fits).sort((a, b) => Number(a) - Number(b));
  let xs: number[] = [];
  let ys: number[] = [];
  for (const xi of xis) {
    xs = xs.concat(fits[xi].eps_grid.map(Math.log));
    ys = ys.concat(fits[xi].medians.map(Math.log));
  }
  const xAxis = niceAxis(Math.min(...xs), Math.max(...xs));
  const yAxis = niceAxis(Math.min(...ys), Math.max(...ys));
  const frame = makeFrame(scene, xAxis, yAxis, {
    title: "crossing-cost medians vs mollification scale",
    xLabel: "log eps", yLabel: "log median crossing cost",
  });
  xis.forEach((xi, i) => {
    const f = fits[xi];
    const color = PALETTE[i % PALETTE.length];
    f.eps_grid.forEach((e, j) => {
      scene.prims.push({ t: "circle", x: frame.xOf(Math.log(e)),
                         y: frame.yOf(Math.log(f.medians[j])), r: 3, color });
    });
    // stored fit: log median = intercept + slope * log eps
    const lx = [xAxis.min, xAxis.max];
    scene.prims.push({
      t: "polyline",
      pts: lx.map((v) => [frame.xOf(v), frame.yOf(f.intercept + f.slope * v)]),
      color, width: 1.5,
    });
  });
  legend(scene, frame, xis.map((xi, i) => ({
    label: `xi=${xi} Q=${fits[xi].q_hat.toFixed(3)}`,
    color: PALETTE[i % PALETTE.length],
  })));
  caption(scene, `slopes 1 - xi*Q from summary.json; seed ${run.manifest.config.master_seed}`);
  return scene;
}

// ---------------------------------------------------------------------------

function maxstatsFigure(run: RunArtifacts): Scene {
  const scene: Scene = { width: W, height: H, prims: [] };
  const centering = run.summary.centering as Record<string, { centering_n: number }>;
  const byN = groupBy(
    run.records.filter((r) => r.statistic === "max_circle_average"),
    (r) => r.parameters.n,
  );
  const ns = [...byN.keys()].sort((a, b) => Number(a) - Number(b));
  const recentered = new Map<string, number[]>();
  let lo = Infinity;
  let hi = -Infinity;
  for (const n of ns) {
    const c = centering[n].centering_n;
    const vals = byN.get(n)!
      .filter((r) => r.value !== "censored")
      .map((r) => (r.value as number) - c);
    recentered.set(n, vals);
    lo = Math.min(lo, ...vals);
    hi = Math.max(hi, ...vals);
  }
  const xAxis = niceAxis(lo, hi);
  const nBins = 24;
  const binW = (xAxis.max - xAxis.min) / nBins;
  const hists = new Map<string, number[]>();
  let peak = 0;
  for (const n of ns) {
    const hist = new Array(nBins).fill(0);
    for (const v of recentered.get(n)!) {
      const b = Math.min(nBins - 1,
                         Math.max(0, Math.floor((v - xAxis.min) / binW)));
      hist[b] += 1;
    }
    hists.set(n, hist);
    peak = Math.max(peak, ...hist);
  }
  const yAxis = niceAxis(0, peak * 1.05);
  const frame = makeFrame(scene, xAxis, yAxis, {
    title: "recentered mesh maxima of circle averages",
    xLabel: "max - (2n - 3/4 log n)", yLabel: "count",
  });
  ns.forEach((n, i) => {
    const color = PALETTE[i % PALETTE.length];
    const hist = hists.get(n)!;
    const pts: [number, number][] = [];
    hist.forEach((c, b) => {
      pts.push([frame.xOf(xAxis.min + b * binW), frame.yOf(c)]);
      pts.push([frame.xOf(xAxis.min + (b + 1) * binW), frame.yOf(c)]);
    });
    scene.prims.push({ t: "polyline", pts, color, width: 1.5 });
  });
  legend(scene, frame, ns.map((n, i) => ({
    label: `n=${n} IQR=${Number(run.summary.iqr[n]).toFixed(3)}`,
    color: PALETTE[i % PALETTE.length],
  })));
  caption(scene,
          `tail slope ${Number(run.summary.tail_slope).toFixed(2)} ` +
          `+- ${Number(run.summary.tail_slope_stderr).toFixed(2)} (target -2)`);
  return scene;
}

// ---------------------------------------------------------------------------

function bridgeFigure(run: RunArtifacts): Scene {
  const scene: Scene = { width: W, height: H, prims: [] };
  const fits = run.summary.fits as Record<string, {
    c1_hat: number; slope: number; acceptance_rate: number;
  }>;
  const byT = groupBy(run.records.filter((r) => r.statistic === "occupation"),
                      (r) => r.parameters.T);
  const Ts = [...byT.keys()].sort((a, b) => Number(a) - Number(b));
  // empirical survival on a per-T grid in the fitted units S/(log T)^2
  let xMax = 0;
  let yMin = 0;
  const curves = new Map<string, [number, number][]>();
  for (const T of Ts) {
    const occ = byT.get(T)!
      .filter((r) => r.value !== "censored")
      .map((r) => r.value as number)
      .sort((a, b) => a - b);
    const logT2 = Math.log(Number(T)) ** 2;
    const n = occ.length;
    const pts: [number, number][] = [];
    for (let q = 1; q <= 40; q++) {
      const s = (occ[n - 1] * q) / 41;
      let cnt = 0;
      for (const v of occ) {
        if (v > s) cnt += 1;
      }
      if (cnt === 0) break;
      const x = s / logT2;
      const y = Math.log(cnt / n);
      pts.push([x, y]);
      xMax = Math.max(xMax, x);
      yMin = Math.min(yMin, y);
    }
    curves.set(T, pts);
  }
  const xAxis = niceAxis(0, xMax);
  const yAxis = niceAxis(yMin, 0);
  const frame = makeFrame(scene, xAxis, yAxis, {
    title: "bridge occupation upper tail",
    xLabel: "S / (log T)^2", yLabel: "log P[occupation > S]",
  });
  Ts.forEach((T, i) => {
    const color = PALETTE[i % PALETTE.length];
    scene.prims.push({
      t: "polyline",
      pts: curves.get(T)!.map(([x, y]) => [frame.xOf(x), frame.yOf(y)]),
      color, width: 1.5,
    });
    // stored fitted rate, anchored at the first curve point
    const pts = curves.get(T)!;
    if (pts.length >= 2) {
      const [x0, y0] = pts[0];
      const slope = fits[T].slope;
      scene.prims.push({
        t: "polyline",
        pts: [[frame.xOf(x0), frame.yOf(y0)],
              [frame.xOf(xAxis.max), frame.yOf(y0 + slope * (xAxis.max - x0))]],
        color, width: 1, dash: [4, 3],
      });
    }
  });
  legend(scene, frame, Ts.map((T, i) => ({
    label: `T=${T} c1=${fits[T].c1_hat.toFixed(2)}`,
    color: PALETTE[i % PALETTE.length],
  })));
  caption(scene,
          `stability ratio x${Number(run.summary.stability_ratio).toFixed(2)}; ` +
          `dashed lines use stored fitted rates`);
  return scene;
}

// ---------------------------------------------------------------------------

function tailFigure(run: RunArtifacts): Scene {
  const scene: Scene = { width: W, height: H, prims: [] };
  const exceedance = run.summary.exceedance as Record<string, {
    S: number[]; upper_prob: (number | null)[]; lower_prob: (number | null)[];
  }>;
  const keys = Object.keys(exceedance).sort();
  let yMin = 0;
  let xMax = 0;
  for (const k of keys) {
    const e = exceedance[k];
    for (const p of [...e.upper_prob, ...e.lower_prob]) {
      if (p !== null && p > 0) yMin = Math.min(yMin, Math.log(p));
    }
    xMax = Math.max(xMax, ...e.S.map((s) => Math.log(s) ** 2));
  }
  const xAxis = niceAxis(0, xMax);
  const yAxis = niceAxis(yMin, 0);
  const frame = makeFrame(scene, xAxis, yAxis, {
    title: "normalized annulus distance tails",
    xLabel: "(log S)^2", yLabel: "log P",
  });
  const entries: { label: string; color: string }[] = [];
  keys.forEach((k, i) => {
    const e = exceedance[k];
    (["upper_prob", "lower_prob"] as const).forEach((side, j) => {
      const color = PALETTE[(2 * i + j) % PALETTE.length];
      const pts: [number, number][] = [];
      e.S.forEach((s, m) => {
        const p = e[side][m];
        if (p !== null && p > 0 && s > 1) {
          pts.push([frame.xOf(Math.log(s) ** 2), frame.yOf(Math.log(p))]);
        }
      });
      if (pts.length) {
        scene.prims.push({ t: "polyline", pts, color, width: 1.5,
                           dash: side === "lower_prob" ? [4, 3] : undefined });
        for (const [x, y] of pts) {
          scene.prims.push({ t: "circle", x, y, r: 2.5, color });
        }
        entries.push({
          label: `${k.split(":")[1]} ${side === "upper_prob" ? "up" : "low"}`,
          color,
        });
      }
    });
  });
  legend(scene, frame, entries);
  caption(scene, "censored bins omitted; linear decay here = lognormal tail");
  return scene;
}

// ---------------------------------------------------------------------------

function modulusFigure(run: RunArtifacts): Scene {
  const scene: Scene = { width: W, height: H, prims: [] };
  const rows = run.records.filter((r) => r.statistic === "pair_distance"
                                  && r.value !== "censored");
  if (rows.length === 0) {
    throw new SchemaError("no pair_distance records");
  }
  const xs = rows.map((r) => Math.log(1 / Number(r.parameters.separation)));
  const ys = rows.map((r) => Math.log(r.value as number));
  const xAxis = niceAxis(Math.min(...xs) * 0.9, Math.max(...xs) * 1.05);
  const yAxis = niceAxis(Math.min(...ys), Math.max(...ys));
  const frame = makeFrame(scene, xAxis, yAxis, {
    title: `worst-pair distances, xi=${run.manifest.config.parameters.xi}`,
    xLabel: "log 1/|z-w|", yLabel: "log distance",
  });
  rows.forEach((r, i) => {
    scene.prims.push({ t: "circle", x: frame.xOf(xs[i]), y: frame.yOf(ys[i]),
                       r: 1.4, color: "#9db8d4" });
  });
  const s = run.summary;
  const tGrid: number[] = [];
  for (let k = 0; k <= 40; k++) {
    tGrid.push(xAxis.min + ((xAxis.max - xAxis.min) * k) / 40);
  }
  // stored models: log D = theta_intercept - theta_hat*log(t);  = chi_intercept + chi_hat*log(sep)
  scene.prims.push({
    t: "polyline",
    pts: tGrid.filter((t) => t > 0.05).map((t) => [
      frame.xOf(t),
      frame.yOf(Number(s.theta_intercept) - Number(s.theta_hat) * Math.log(t)),
    ]),
    color: PALETTE[1], width: 1.8,
  });
  scene.prims.push({
    t: "polyline",
    pts: tGrid.map((t) => [
      frame.xOf(t),
      frame.yOf(Number(s.chi_intercept) - Number(s.chi_hat) * t),
    ]),
    color: PALETTE[2], width: 1.8, dash: [5, 3],
  });
  legend(scene, frame, [
    { label: `log-power theta=${Number(s.theta_hat).toFixed(3)}`, color: PALETTE[1] },
    { label: `euclid chi=${Number(s.chi_hat).toFixed(3)}`, color: PALETTE[2] },
  ]);
  caption(scene,
          `model selected: ${s.model_selected} ` +
          `(SSR log ${Number(s.ssr_log_power).toFixed(2)} vs ` +
          `euclid ${Number(s.ssr_euclid_power).toFixed(2)})`);
  return scene;
}
