// Demo page wiring. Everything numerical happens in the wasm module; this
// file only moves JSON around and paints canvases.

let wasm;
try {
  wasm = await import("./pkg/mvoprobit_wasm.js");
  await wasm.default();
} catch (e) {
  document.getElementById("load-error").style.display = "block";
  throw e;
}

const model = JSON.parse(wasm.demo_model_json());
const MODES = ["cycling", "bikeshare", "walking"];
const RES = 81;

// ---- controls -------------------------------------------------------------

const sliders = [
  { id: "rho_cb", label: "ρ cycling–bikeshare", get: () => model.params.correlations[0], set: v => model.params.correlations[0] = v, min: -0.9, max: 0.9, step: 0.01 },
  { id: "rho_cw", label: "ρ cycling–walking", get: () => model.params.correlations[1], set: v => model.params.correlations[1] = v, min: -0.9, max: 0.9, step: 0.01 },
  { id: "rho_bw", label: "ρ bikeshare–walking", get: () => model.params.correlations[2], set: v => model.params.correlations[2] = v, min: -0.9, max: 0.9, step: 0.01 },
];
MODES.forEach((m, e) => {
  sliders.push({
    id: `b_${m}_id`, label: `β ${m} · identity`,
    get: () => model.params.beta[e][0], set: v => model.params.beta[e][0] = v,
    min: -2, max: 2, step: 0.05,
  });
  sliders.push({
    id: `b_${m}_mm`, label: `β ${m} · multimodality`,
    get: () => model.params.beta[e][1], set: v => model.params.beta[e][1] = v,
    min: -2, max: 2, step: 0.05,
  });
});

const controls = document.getElementById("contour-controls");
for (const s of sliders) {
  const label = document.createElement("label");
  label.innerHTML = `${s.label} <span class="value" id="${s.id}_v"></span>`;
  const input = document.createElement("input");
  input.type = "range";
  input.min = s.min;
  input.max = s.max;
  input.step = s.step;
  input.value = s.get();
  input.id = s.id;
  input.addEventListener("input", () => {
    s.set(parseFloat(input.value));
    document.getElementById(`${s.id}_v`).textContent = parseFloat(input.value).toFixed(2);
    scheduleRedraw();
  });
  label.appendChild(input);
  controls.appendChild(label);
  document.getElementById(`${s.id}_v`).textContent = s.get().toFixed(2);
}

// ---- contour maps ----------------------------------------------------------

const maps = document.getElementById("maps");
const canvases = {};
for (const m of MODES) {
  const cell = document.createElement("div");
  cell.className = "map-cell";
  const canvas = document.createElement("canvas");
  canvas.width = RES;
  canvas.height = RES;
  canvas.style.width = "210px";
  canvas.style.height = "210px";
  cell.appendChild(canvas);
  const cap = document.createElement("div");
  cap.className = "caption";
  cap.textContent = `${m} — identity → / multimodality ↑`;
  cell.appendChild(cap);
  maps.appendChild(cell);
  canvases[m] = canvas;
}

const STAGE_NAMES = ["precontemplation", "contemplation", "preparation", "action–maintenance"];

function hexToRgb(hex) {
  return [1, 3, 5].map(i => parseInt(hex.slice(i, i + 2), 16));
}

function drawContours() {
  let out;
  try {
    out = JSON.parse(wasm.contour_json(JSON.stringify(model), JSON.stringify({
      var_a: "identity",
      var_b: "multimodality",
      range_a: [-2.5, 2.5],
      range_b: [-2.5, 2.5],
      resolution: RES,
    })));
  } catch (e) {
    // Slider combinations that break positive definiteness: keep the last
    // valid frame and show nothing new.
    console.warn(e);
    return;
  }
  const palette = out.palette.map(hexToRgb);
  const legend = document.getElementById("legend");
  legend.innerHTML = "";
  out.palette.forEach((c, i) => {
    const span = document.createElement("span");
    span.style.setProperty("--c", c);
    span.textContent = STAGE_NAMES[i];
    legend.appendChild(span);
  });
  for (const eq of out.equations) {
    const canvas = canvases[eq.name];
    const ctx = canvas.getContext("2d");
    const img = ctx.createImageData(RES, RES);
    for (let ib = 0; ib < RES; ib++) {
      for (let ia = 0; ia < RES; ia++) {
        const node = ib * RES + ia;
        const stage = eq.argmax[node];
        const paletteIdx = eq.n_stages <= 1 ? 0 :
          Math.min(3, Math.round(stage * 3 / (eq.n_stages - 1)));
        const [r, g, b] = palette[paletteIdx];
        // Shade by the winning probability so soft frontiers look soft.
        const conf = 0.45 + 0.55 * eq.confidence[node];
        const px = ((RES - 1 - ib) * RES + ia) * 4; // low multimodality at the bottom
        img.data[px] = Math.round(255 - (255 - r) * conf);
        img.data[px + 1] = Math.round(255 - (255 - g) * conf);
        img.data[px + 2] = Math.round(255 - (255 - b) * conf);
        img.data[px + 3] = 255;
      }
    }
    ctx.putImageData(img, 0, 0);
  }
}

// ---- stage curves ----------------------------------------------------------

function drawCurves() {
  const eq = document.getElementById("curve-eq").value;
  const cov = document.getElementById("curve-cov").value;
  const other = cov === "identity" ? "multimodality" : "identity";
  let out;
  try {
    out = JSON.parse(wasm.stage_curves_json(
      JSON.stringify(model), eq, cov, -3.0, 3.0, 121,
      JSON.stringify({ [other]: 0.0 }),
    ));
  } catch (e) {
    console.warn(e);
    return;
  }
  const canvas = document.getElementById("curves");
  const ctx = canvas.getContext("2d");
  const W = canvas.width, H = canvas.height;
  const padL = 42, padB = 28, padT = 12, padR = 12;
  ctx.clearRect(0, 0, W, H);
  ctx.strokeStyle = "#d8d8cf";
  ctx.beginPath();
  ctx.moveTo(padL, padT);
  ctx.lineTo(padL, H - padB);
  ctx.lineTo(W - padR, H - padB);
  ctx.stroke();
  ctx.fillStyle = "#59604f";
  ctx.font = "11px sans-serif";
  for (const frac of [0, 0.5, 1]) {
    const y = H - padB - frac * (H - padB - padT);
    ctx.fillText(frac.toFixed(1), 14, y + 4);
  }
  ctx.fillText(`${cov} →`, W / 2 - 30, H - 8);

  const palette = ["#d73027", "#fdae61", "#a6d96a", "#1a9850"];
  const nStages = out.curves.length;
  out.curves.forEach((curve, j) => {
    const paletteIdx = nStages <= 1 ? 0 : Math.min(3, Math.round(j * 3 / (nStages - 1)));
    ctx.strokeStyle = palette[paletteIdx];
    ctx.lineWidth = 2;
    ctx.beginPath();
    curve.forEach((p, i) => {
      const x = padL + (i / (curve.length - 1)) * (W - padL - padR);
      const y = H - padB - p * (H - padB - padT);
      if (i === 0) ctx.moveTo(x, y); else ctx.lineTo(x, y);
    });
    ctx.stroke();
  });
}

document.getElementById("curve-eq").addEventListener("change", drawCurves);
document.getElementById("curve-cov").addEventListener("change", drawCurves);

// ---- multimodality ----------------------------------------------------------

const MODE_LIST = ["drive", "carpool", "transit", "walk", "cycle", "bikeshare", "taxi", "other"];
const freqBox = document.getElementById("freqs");
const freqInputs = MODE_LIST.map((m, i) => {
  const label = document.createElement("label");
  label.textContent = m;
  label.style.fontSize = "0.8rem";
  const input = document.createElement("input");
  input.type = "number";
  input.min = "0";
  input.step = "0.5";
  input.value = [8, 1.5, 3.5, 5.5, 1.5, 0, 0, 0][i];
  input.addEventListener("input", updateIndices);
  label.appendChild(input);
  freqBox.appendChild(label);
  return input;
});

function updateIndices() {
  const f = freqInputs.map(i => parseFloat(i.value) || 0);
  try {
    const out = JSON.parse(wasm.multimodality_json(new Float64Array(f)));
    document.getElementById("sei-out").textContent = out.sei.toFixed(4);
    document.getElementById("hhi-out").textContent = out.hhi.toFixed(4);
  } catch (e) {
    document.getElementById("sei-out").textContent = "—";
    document.getElementById("hhi-out").textContent = "—";
  }
}

// ---- scheduling --------------------------------------------------------------

let pending = false;
function scheduleRedraw() {
  if (pending) return;
  pending = true;
  requestAnimationFrame(() => {
    pending = false;
    drawContours();
    drawCurves();
  });
}

drawContours();
drawCurves();
updateIndices();
