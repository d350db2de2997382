import init, { panelGrid, toyTrajectory, klBound } from "./pkg/flatopt_wasm.js";

const LO = -4, HI = 4;
const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function color(t) {
  // dark blue (low) to pale yellow (high)
  const r = Math.round(255 * Math.min(1, 1.6 * t));
  const g = Math.round(255 * Math.min(1, 0.2 + t));
  const b = Math.round(255 * (0.45 + 0.4 * t * t));
  return [r, g, Math.min(255, b)];
}

function heatmap(canvas, values, res) {
  let lo = Infinity, hi = -Infinity;
  for (const v of values) { lo = Math.min(lo, v); hi = Math.max(hi, v); }
  const off = document.createElement("canvas");
  off.width = res; off.height = res;
  const ctx = off.getContext("2d");
  const img = ctx.createImageData(res, res);
  for (let j = 0; j < res; j++) {
    for (let i = 0; i < res; i++) {
      const v = values[j * res + i];
      const [r, g, b] = color(hi > lo ? (v - lo) / (hi - lo) : 0);
      const k = 4 * ((res - 1 - j) * res + i);
      img.data[k] = r; img.data[k + 1] = g; img.data[k + 2] = b; img.data[k + 3] = 255;
    }
  }
  ctx.putImageData(img, 0, 0);
  const out = canvas.getContext("2d");
  out.imageSmoothingEnabled = false;
  out.drawImage(off, 0, 0, canvas.width, canvas.height);
}

function drawPanels() {
  const res = num("res"), rho = num("rho"), mc = num("mc");
  $("status").textContent = "computing…";
  setTimeout(() => {
    const t0 = performance.now();
    try {
      for (const p of ["a", "b", "c", "d"]) {
        heatmap($("panel-" + p), panelGrid(p, rho, res, mc), res);
      }
      $("status").textContent = `${(performance.now() - t0).toFixed(0)} ms`;
    } catch (e) {
      $("status").textContent = String(e);
    }
  }, 0);
}

let background = null;
const paths = [];
const PATH_COLORS = { sgd: "#e41a1c", sam: "#377eb8", rsam: "#4daf4a", mfvi: "#984ea3", vsam: "#ff7f00" };

function toCanvas(canvas, x, y) {
  return [(x - LO) / (HI - LO) * canvas.width, (HI - y) / (HI - LO) * canvas.height];
}

function drawPaths() {
  const c = $("paths"), ctx = c.getContext("2d");
  if (background) ctx.drawImage(background, 0, 0);
  for (const { name, xy } of paths) {
    ctx.strokeStyle = PATH_COLORS[name];
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    for (let k = 0; k < xy.length; k += 2) {
      const [px, py] = toCanvas(c, xy[k], xy[k + 1]);
      k === 0 ? ctx.moveTo(px, py) : ctx.lineTo(px, py);
    }
    ctx.stroke();
    const [ex, ey] = toCanvas(c, xy[xy.length - 2], xy[xy.length - 1]);
    ctx.fillStyle = PATH_COLORS[name];
    ctx.fillRect(ex - 3, ey - 3, 6, 6);
  }
}

function addPath(ev) {
  const c = $("paths"), rect = c.getBoundingClientRect();
  const x = LO + (ev.clientX - rect.left) / rect.width * (HI - LO);
  const y = HI - (ev.clientY - rect.top) / rect.height * (HI - LO);
  const name = $("opt").value;
  try {
    const xy = toyTrajectory(name, x, y, num("trho"), num("lr"), num("mom"), num("steps"), BigInt(num("seed")));
    paths.push({ name, xy });
    drawPaths();
  } catch (e) {
    alert(String(e));
  }
}

function parseList(id) {
  return Float64Array.from($(id).value.split(",").map((s) => Number(s.trim())));
}

function updateBound() {
  const rows = $("bound");
  try {
    const [kl, gamma, withCover, withoutCover] = klBound(
      parseList("mu"), parseList("s2"), num("s0"), num("n"), num("delta"), num("emp"), num("lmax"), num("cover"));
    rows.innerHTML = [
      ["KL[q ‖ prior]", kl], ["γ", gamma], ["bound (with cover term)", withCover], ["bound (without)", withoutCover],
    ].map(([k, v]) => `<tr><td>${k}</td><td>${v.toPrecision(8)}</td></tr>`).join("");
  } catch (e) {
    rows.innerHTML = `<tr><td>${String(e)}</td></tr>`;
  }
}

await init();
$("draw").addEventListener("click", drawPanels);
$("paths").addEventListener("click", addPath);
$("clear").addEventListener("click", () => { paths.length = 0; drawPaths(); });
for (const id of ["mu", "s2", "s0", "n", "delta", "emp", "lmax", "cover"]) {
  $(id).addEventListener("input", updateBound);
}

const res = 120;
background = document.createElement("canvas");
background.width = $("paths").width; background.height = $("paths").height;
heatmap(background, panelGrid("a", 0, res, 2), res);
drawPaths();
drawPanels();
updateBound();
