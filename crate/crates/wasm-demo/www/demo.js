import init, { interpolationCurve, stepResponse, validateSetpoint } from "./pkg/icn_wasm.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function plot(canvas, series) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  ctx.clearRect(0, 0, w, h);
  const pts = series.flatMap((s) => s.rows);
  const xs = pts.map((p) => p[0]);
  const ys = pts.map((p) => p[1]);
  let [x0, x1, y0, y1] = [Math.min(...xs), Math.max(...xs), Math.min(...ys), Math.max(...ys)];
  if (x1 === x0) x1 = x0 + 1;
  if (y1 === y0) { y0 -= 1; y1 += 1; }
  const pad = 40;
  const sx = (x) => pad + ((x - x0) / (x1 - x0)) * (w - 2 * pad);
  const sy = (y) => h - pad + ((y0 - y) / (y1 - y0)) * (h - 2 * pad);

  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  ctx.fillStyle = "#444";
  ctx.font = "11px sans-serif";
  ctx.fillText(y1.toPrecision(4), 2, pad + 4);
  ctx.fillText(y0.toPrecision(4), 2, h - pad);
  ctx.fillText(x0.toPrecision(4), pad, h - pad + 14);
  ctx.fillText(x1.toPrecision(4), w - pad - 30, h - pad + 14);

  for (const s of series) {
    ctx.strokeStyle = s.color;
    ctx.setLineDash(s.dash || []);
    ctx.beginPath();
    s.rows.forEach(([x, y], i) => (i ? ctx.lineTo(sx(x), sy(y)) : ctx.moveTo(sx(x), sy(y))));
    ctx.stroke();
  }
  ctx.setLineDash([]);
}

function guard(msgId, f) {
  const msg = $(msgId);
  msg.textContent = "";
  msg.className = "";
  try {
    f();
  } catch (e) {
    msg.textContent = e.message || String(e);
    msg.className = "err";
  }
}

function drawCurve() {
  guard("curve-msg", () => {
    const rows = JSON.parse(interpolationCurve($("knots").value, num("samples")));
    const knots = JSON.parse($("knots").value);
    plot($("curve"), [
      { rows, color: "#1764ab" },
      { rows: knots, color: "#d0802a", dash: [3, 3] },
    ]);
  });
}

function drawStep() {
  guard("step-msg", () => {
    const rows = JSON.parse(
      stepResponse(num("s-low"), num("s-high"), num("s-from"), num("s-to"), num("s-tau"),
        num("s-noise"), num("s-seed"), num("s-dur"), 100));
    const end = rows[rows.length - 1][0];
    plot($("step"), [
      { rows, color: "#1764ab" },
      { rows: [[0, num("s-to")], [end, num("s-to")]], color: "#2a9d4b", dash: [4, 4] },
    ]);
    $("step-msg").textContent = `${rows.length} samples, final PV ${rows[rows.length - 1][1].toFixed(3)}`;
  });
}

function sendSetpoint() {
  guard("sp-verdict", () => {
    const r = JSON.parse(
      validateSetpoint($("v-sym").value, $("v-proc").value, num("v-low"), num("v-high"),
        num("v-pv"), num("v-sp"), num("v-val"), Date.now()));
    $("sp-verdict").textContent = `${r.applied ? "applied" : "rejected"} (priority ${r.priority}): ${r.text}`;
    $("sp-verdict").className = r.applied ? "" : "err";
    $("sp-sl").textContent = r.sl;
  });
}

await init();
$("curve-go").onclick = drawCurve;
$("step-go").onclick = drawStep;
$("sp-go").onclick = sendSetpoint;
drawCurve();
drawStep();
sendSetpoint();
