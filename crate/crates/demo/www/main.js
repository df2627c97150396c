import init, { density, convergence, torsion } from "./pkg/l2lab_demo.js";

const $ = (id) => document.getElementById(id);
const levels = (text) => Uint32Array.from(text.split(",").map((s) => parseInt(s.trim(), 10)));

function show(id, text, isError = false) {
  const el = $(id);
  el.textContent = text;
  el.className = isError ? "out err" : "out";
}

// Draws polylines given in data coordinates, with a light frame and axis labels.
function plot(canvas, series, { xlabel, ylabel, logx = false }) {
  const ctx = canvas.getContext("2d");
  const w = canvas.width, h = canvas.height, pad = 40;
  ctx.clearRect(0, 0, w, h);
  const tx = (x) => (logx ? Math.log10(x) : x);
  const pts = series.flatMap((s) => s.points);
  let [x0, x1] = [Math.min(...pts.map((p) => tx(p[0]))), Math.max(...pts.map((p) => tx(p[0])))];
  let [y0, y1] = [Math.min(...pts.map((p) => p[1])), Math.max(...pts.map((p) => p[1]))];
  if (x0 === x1) { x0 -= 1; x1 += 1; }
  if (y0 === y1) { y0 -= 1; y1 += 1; }
  const dy = (y1 - y0) * 0.05;
  y0 -= dy; y1 += dy;
  const sx = (x) => pad + ((tx(x) - x0) / (x1 - x0)) * (w - 2 * pad);
  const sy = (y) => h - pad + ((y0 - y) / (y1 - y0)) * (h - 2 * pad);

  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  ctx.fillStyle = "#444";
  ctx.font = "12px sans-serif";
  ctx.fillText(xlabel, w / 2, h - 8);
  ctx.fillText(ylabel, 4, pad - 10);
  ctx.fillText(y1.toPrecision(4), 4, pad + 4);
  ctx.fillText(y0.toPrecision(4), 4, h - pad);

  for (const s of series) {
    ctx.strokeStyle = s.color;
    ctx.setLineDash(s.dashed ? [6, 4] : []);
    ctx.beginPath();
    s.points.forEach(([x, y], i) => (i ? ctx.lineTo(sx(x), sy(y)) : ctx.moveTo(sx(x), sy(y))));
    ctx.stroke();
    if (s.marks) {
      ctx.fillStyle = s.color;
      for (const [x, y] of s.points) ctx.fillRect(sx(x) - 2, sy(y) - 2, 4, 4);
    }
  }
  ctx.setLineDash([]);
}

function runDensity() {
  try {
    const r = JSON.parse(density($("d-poly").value, $("d-scheme").value, parseInt($("d-level").value, 10)));
    // Right-continuous steps: horizontal run, then a jump at each eigenvalue.
    const pts = [];
    let prev = 0;
    for (const [x, f] of r.steps) {
      pts.push([x, prev], [x, f]);
      prev = f;
    }
    plot($("d-plot"), [{ points: pts, color: "#1f77b4" }], { xlabel: "λ", ylabel: "F(λ)" });
    show("d-out", `N_m = ${r.n_m}, F(threshold) = ${r.f_at_0}, ${r.steps.length} distinct eigenvalues`);
  } catch (e) {
    show("d-out", String(e), true);
  }
}

function runConvergence() {
  try {
    const r = JSON.parse(convergence($("c-poly").value, $("c-scheme").value, levels($("c-levels").value)));
    const est = r.levels.map((m, i) => [m, r.log_det[i]]);
    const target = Math.log(r.mahler);
    const flat = [[r.levels[0], target], [r.levels[r.levels.length - 1], target]];
    plot($("c-plot"), [
      { points: est, color: "#d62728", marks: true },
      { points: flat, color: "#2ca02c", dashed: true },
    ], { xlabel: "level m (log scale)", ylabel: "log Det", logx: true });
    const rows = r.levels.map((m, i) => `m = ${m}: log Det ≈ ${r.log_det[i]}`).join("\n");
    const note = r.low_precision ? " (quadrature low precision)" : "";
    show("c-out", `${rows}\nlog Mahler measure = ${target}${note}`);
  } catch (e) {
    show("c-out", String(e), true);
  }
}

function runTorsion() {
  try {
    const r = JSON.parse(torsion($("t-complex").value, $("t-scheme").value, levels($("t-levels").value)));
    const out = $("t-out");
    out.className = "out";
    out.innerHTML = "";
    const table = document.createElement("table");
    table.innerHTML = "<tr><th>degree</th><th>rank</th><th>Betti</th><th>log Det Δ⁺</th><th>contribution</th><th>class</th></tr>";
    for (const d of r.degrees) {
      const tr = document.createElement("tr");
      for (const v of [d.degree, d.rank, d.betti, d.log_det, d.contribution, d.determinant_class.verdict]) {
        const td = document.createElement("td");
        td.textContent = v;
        tr.appendChild(td);
      }
      table.appendChild(tr);
    }
    out.appendChild(table);
    const summary = document.createElement("p");
    summary.textContent = `log torsion = ${r.log_torsion}, reliable: ${r.reliable}, ` +
      `Σ(−1)^j b_j = ${r.betti_alternating_sum}, Euler characteristic ${r.euler_characteristic}`;
    out.appendChild(summary);
  } catch (e) {
    show("t-out", String(e), true);
  }
}

await init();
$("d-run").onclick = runDensity;
$("c-run").onclick = runConvergence;
$("t-run").onclick = runTorsion;
runDensity();
runConvergence();
runTorsion();
