import init, { Scan, curvature, shape_name, fisher_pair } from "./pkg/fgai_demo.js";

const KINDS = ["K", "H", "GL", "LD", "SI"];
const $ = (id) => document.getElementById(id);
let scan = null;

function paint(canvas, rgba, size) {
  canvas.width = size;
  canvas.height = size;
  const img = new ImageData(new Uint8ClampedArray(rgba), size, size);
  canvas.getContext("2d").putImageData(img, 0, 0);
}

function render() {
  $("render-msg").textContent = "";
  try {
    scan?.free();
    scan = new Scan($("relief").value, Number($("grid").value), BigInt($("seed").value), Number($("size").value));
  } catch (e) {
    scan = null;
    $("render-msg").textContent = String(e);
    return;
  }
  const row = $("gais");
  row.replaceChildren();
  for (const k of KINDS) {
    const fig = document.createElement("figure");
    const c = document.createElement("canvas");
    paint(c, scan.gai_rgba(k), scan.size());
    const cap = document.createElement("figcaption");
    cap.textContent = k;
    fig.append(c, cap);
    row.append(fig);
  }
  $("stats").textContent = scan.stats_json();
  fuse();
}

function fuse() {
  if (!scan) return;
  const combo = [$("c0").value, $("c1").value, $("c2").value].join("-");
  $("rot-v").value = $("rot").value;
  $("noise-v").value = $("noise").value;
  $("fuse-msg").textContent = "";
  $("fgai-cap").textContent = combo;
  try {
    paint($("fgai"), scan.fgai_rgba(combo), scan.size());
    const aug = scan.augmented_rgba(combo, $("flip").checked, Number($("rot").value), Number($("noise").value), 7n);
    paint($("aug"), aug, scan.size());
  } catch (e) {
    $("fuse-msg").textContent = String(e);
  }
}

function curv() {
  const k1 = Number($("k1").value);
  const k2 = Number($("k2").value);
  $("k1-v").value = k1.toFixed(2);
  $("k2-v").value = k2.toFixed(2);
  const [K, H, SI] = curvature(k1, k2);
  $("K").value = K.toFixed(3);
  $("H").value = H.toFixed(3);
  $("SI").value = SI.toFixed(3);
  $("shape").value = shape_name(SI);
}

function fisher() {
  const v = ["ma", "sa", "mb", "sb"].map((id) => Number($(id).value));
  $("J").value = fisher_pair(...v).toPrecision(4);
}

await init();
["c0", "c1", "c2"].forEach((id, i) => {
  for (const k of KINDS) $(id).add(new Option(k, k));
  $(id).value = ["H", "LD", "SI"][i];
  $(id).addEventListener("change", fuse);
});
["flip", "rot", "noise"].forEach((id) => $(id).addEventListener("input", fuse));
["k1", "k2"].forEach((id) => $(id).addEventListener("input", curv));
["ma", "sa", "mb", "sb"].forEach((id) => $(id).addEventListener("input", fisher));
$("render").addEventListener("click", render);
curv();
fisher();
render();
