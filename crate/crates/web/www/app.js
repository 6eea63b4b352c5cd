import init, { fitScenario, ridgeTradeoff, assumptionCell } from "./pkg/ridge_lmm_web.js";

const field = (set, name) => set.querySelector(`[name=${name}]`).value;
const num = (set, name) => Number(field(set, name));

function wire(id, action) {
  const set = document.getElementById(id);
  const out = set.querySelector(".out");
  set.querySelector("button").addEventListener("click", () => {
    out.className = "out";
    out.textContent = "running…";
    // let the status paint before the synchronous wasm call
    setTimeout(() => {
      try {
        action(set, out);
      } catch (e) {
        out.className = "out err";
        out.textContent = String(e.message ?? e);
      }
    }, 10);
  });
}

const PAD = 40;

function scales(canvas, xmin, xmax, ymin, ymax) {
  const w = canvas.width - 2 * PAD;
  const h = canvas.height - 2 * PAD;
  const x = (v) => PAD + ((v - xmin) / (xmax - xmin)) * w;
  const y = (v) => PAD + h - ((v - ymin) / (ymax - ymin)) * h;
  return { x, y };
}

function frame(canvas, xmin, xmax, ymin, ymax) {
  const ctx = canvas.getContext("2d");
  const h = canvas.height - 2 * PAD;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(PAD, PAD, canvas.width - 2 * PAD, h);
  ctx.fillStyle = "#555";
  ctx.font = "11px sans-serif";
  ctx.fillText(ymax.toPrecision(3), 2, PAD + 4);
  ctx.fillText(ymin.toPrecision(3), 2, PAD + h);
  return { ctx, ...scales(canvas, xmin, xmax, ymin, ymax) };
}

function polyline(ctx, xs, ys, color) {
  ctx.strokeStyle = color;
  ctx.beginPath();
  xs.forEach((v, k) => (k ? ctx.lineTo(v, ys[k]) : ctx.moveTo(v, ys[k])));
  ctx.stroke();
}

function drawIntervals(canvas, r) {
  const shown = Math.min(r.truth.length, 40);
  const finite = (v) => Number.isFinite(v);
  const lo = Math.min(...r.ci_lower.slice(0, shown).filter(finite), ...r.truth.slice(0, shown)) - 0.2;
  const hi = Math.max(...r.ci_upper.slice(0, shown).filter(finite), ...r.truth.slice(0, shown)) + 0.2;
  const { ctx, x, y } = frame(canvas, -1, shown, lo, hi);
  ctx.strokeStyle = "#ccc";
  ctx.beginPath();
  ctx.moveTo(x(-1), y(0));
  ctx.lineTo(x(shown), y(0));
  ctx.stroke();
  for (let j = 0; j < shown; j++) {
    const covered = r.ci_lower[j] <= r.truth[j] && r.truth[j] <= r.ci_upper[j];
    ctx.strokeStyle = r.p_value[j] <= 0.05 ? "#1565c0" : "#888";
    ctx.beginPath();
    ctx.moveTo(x(j), y(Math.max(r.ci_lower[j], lo)));
    ctx.lineTo(x(j), y(Math.min(r.ci_upper[j], hi)));
    ctx.stroke();
    ctx.fillStyle = covered ? "#2e7d32" : "#c62828";
    ctx.fillRect(x(j) - 3, y(r.truth[j]) - 3, 6, 6);
  }
}

wire("fit", (set, out) => {
  const r = JSON.parse(
    fitScenario(
      field(set, "model"), num(set, "p"), num(set, "d"), num(set, "b"), num(set, "sigma"),
      num(set, "tau"), num(set, "m"), num(set, "n"), num(set, "seed"),
    ),
  );
  drawIntervals(set.querySelector("canvas"), r);
  const rejected = r.p_value.map((p, j) => [p, j]).filter(([p]) => p <= 0.05).map(([, j]) => j);
  const covered = r.truth.filter((b, j) => r.ci_lower[j] <= b && b <= r.ci_upper[j]).length;
  out.textContent =
    `N = ${r.n_obs}, σ̂² = ${r.sigma2_hat.toFixed(3)}, τ̂² = ${r.tau2_hat.toFixed(3)}, λ_L = ${r.lambda_l.toFixed(3)}\n` +
    `screened: [${r.selected.join(", ")}]\n` +
    `rejected at 5%: [${rejected.join(", ")}]\n` +
    `intervals covering the truth: ${covered} of ${r.truth.length} ` +
    `(first 40 drawn; squares mark the truth, blue bars are rejections)`;
});

wire("tradeoff", (set, out) => {
  const pts = JSON.parse(
    ridgeTradeoff("M1", num(set, "p"), 0.5, 1.0, num(set, "m"), num(set, "n"), num(set, "seed"), -5, 2, 40),
  );
  const canvas = set.querySelector("canvas");
  const lx = pts.map((p) => Math.log10(p.lambda));
  const hw = pts.map((p) => Math.log10(p.mean_half_width));
  const bias = pts.map((p) => Math.log10(Math.max(p.max_bias, 1e-12)));
  const all = hw.concat(bias);
  const { ctx, x, y } = frame(canvas, lx[0], lx[lx.length - 1], Math.min(...all), Math.max(...all));
  polyline(ctx, lx.map(x), hw.map(y), "#1565c0");
  polyline(ctx, lx.map(x), bias.map(y), "#c62828");
  out.textContent =
    "x: log10 λ, y: log10. blue: mean interval half-width (no slack); red: largest shrinkage bias on the same scale.\n" +
    pts.filter((_, k) => k % 8 === 0)
      .map((p) => `λ = ${p.lambda.toExponential(2)}  half-width = ${p.mean_half_width.toFixed(4)}  bias = ${p.max_bias.toExponential(2)}`)
      .join("\n");
});

wire("assumptions", (set, out) => {
  const c = JSON.parse(assumptionCell(num(set, "p"), num(set, "d"), num(set, "reps"), num(set, "seed")));
  out.textContent =
    `P(T_IR < 1) = ${c.prop_irrepresentable.value.toFixed(3)} ± ${c.prop_irrepresentable.stderr.toFixed(3)}\n` +
    `P(T_4 < 5)  = ${c.prop_t4_bounded.value.toFixed(3)} ± ${c.prop_t4_bounded.stderr.toFixed(3)}\n` +
    `failed replicates: ${c.n_failed}`;
});

await init();
