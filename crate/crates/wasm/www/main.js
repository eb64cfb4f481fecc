import init, { alignTexts, roverVote, roverSweep, augmentDemo } from "./pkg/cskit_wasm.js";

const $ = (id) => document.getElementById(id);

function esc(s) {
  return String(s).replace(/[&<>"]/g, (c) => ({ "&": "&amp;", "<": "&lt;", ">": "&gt;", '"': "&quot;" })[c]);
}

function guard(out, f) {
  try {
    f();
  } catch (e) {
    out.innerHTML = `<p class="err">${esc(e.message ?? e)}</p>`;
  }
}

const tok = (t) => (t ? esc(t.text) : "&empty;");
const pct = (r) => (r == null ? "n/a" : r.toFixed(2) + "%");

function runAlign() {
  const out = $("align-out");
  guard(out, () => {
    const r = JSON.parse(alignTexts($("ref").value, $("hyp").value));
    const cells = r.ops
      .map((o) => `<td class="${o.kind}">${tok(o.ref)}<br>${tok(o.hyp)}<br><small>${o.kind}</small></td>`)
      .join("");
    const langs = r.per_lang
      .filter((l) => l.n_ref > 0)
      .map((l) => `${l.lang} ${pct(l.rate)} (${l.errors}/${l.n_ref})`)
      .join(", ");
    out.innerHTML =
      `<table><tr>${cells}</tr></table>` +
      `<p><b>MER ${pct(r.mer)}</b> S=${r.sub} D=${r.del} I=${r.ins} N=${r.n_ref}; ${langs}</p>`;
  });
}

function runVote() {
  const out = $("rover-out");
  $("en-val").textContent = $("en").value;
  $("null-val").textContent = $("null").value;
  guard(out, () => {
    const r = JSON.parse(roverVote($("systems").value, +$("en").value, +$("null").value));
    const cols = r.slots
      .map((s) => {
        const rows = s.votes
          .map((v) => `<div class="${v.winner ? "win" : ""}">${tok(v.token)} &times;${v.count} = ${v.score}</div>`)
          .join("");
        return `<td>${rows}</td>`;
      })
      .join("");
    out.innerHTML = `<table><tr>${cols}</tr></table><p>Fused: <b>${esc(r.fused)}</b></p>`;
  });
}

function drawSweep(r) {
  const c = $("sweep");
  const g = c.getContext("2d");
  g.clearRect(0, 0, c.width, c.height);
  const pad = 36;
  const xs = r.rows.map((p) => p.weight);
  const ys = r.rows.map((p) => p.mer);
  const [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  const [y0, y1] = [0, Math.max(...ys) * 1.1];
  const X = (x) => pad + ((x - x0) / (x1 - x0 || 1)) * (c.width - 2 * pad);
  const Y = (y) => c.height - pad - ((y - y0) / (y1 - y0 || 1)) * (c.height - 2 * pad);
  g.strokeStyle = "#999";
  g.strokeRect(pad, pad, c.width - 2 * pad, c.height - 2 * pad);
  g.fillStyle = "#333";
  g.font = "12px sans-serif";
  g.fillText(`MER ${y1.toFixed(1)}%`, 2, pad - 6);
  g.fillText(`EN weight ${x0} .. ${x1}`, c.width / 2 - 50, c.height - 10);
  g.strokeStyle = "#1565c0";
  g.beginPath();
  r.rows.forEach((p, i) => (i ? g.lineTo(X(p.weight), Y(p.mer)) : g.moveTo(X(p.weight), Y(p.mer))));
  g.stroke();
  for (const p of r.rows) {
    g.fillStyle = p.weight === r.best ? "#c62828" : "#1565c0";
    g.beginPath();
    g.arc(X(p.weight), Y(p.mer), 4, 0, 2 * Math.PI);
    g.fill();
  }
}

function runSweep() {
  const out = $("sweep-out");
  out.textContent = "running...";
  setTimeout(() =>
    guard(out, () => {
      const r = JSON.parse(roverSweep(+$("sweep-seed").value, 200, 0.5, 6, 0.5));
      drawSweep(r);
      const best = Math.min(...r.systems);
      out.innerHTML = `Best weight <b>${r.best}</b>; best single system ${pct(best)}`;
    }),
  );
}

function heatmap(canvas, m, lo, hi) {
  const scale = 3;
  canvas.width = m.frames * scale;
  canvas.height = m.dims * scale;
  const g = canvas.getContext("2d");
  const img = g.createImageData(m.frames, m.dims);
  for (let t = 0; t < m.frames; t++) {
    for (let f = 0; f < m.dims; f++) {
      const v = Math.max(0, Math.min(1, (m.values[t * m.dims + f] - lo) / (hi - lo || 1)));
      const i = ((m.dims - 1 - f) * m.frames + t) * 4;
      img.data[i] = 255 * Math.min(1, 2 * v);
      img.data[i + 1] = 255 * Math.max(0, 2 * v - 1);
      img.data[i + 2] = 255 * (1 - v) * 0.6;
      img.data[i + 3] = 255;
    }
  }
  const tmp = new OffscreenCanvas(m.frames, m.dims);
  tmp.getContext("2d").putImageData(img, 0, 0);
  g.imageSmoothingEnabled = false;
  g.drawImage(tmp, 0, 0, canvas.width, canvas.height);
}

function runAugment() {
  const out = $("aug-out");
  guard(out, () => {
    const r = JSON.parse(
      augmentDemo(+$("speed").value, +$("fm").value, +$("fw").value, +$("tm").value, +$("tw").value,
        +$("ww").value, $("mean").checked, +$("aug-seed").value),
    );
    const lo = Math.min(...r.clean.values);
    const hi = Math.max(...r.clean.values);
    heatmap($("clean"), r.clean, lo, hi);
    heatmap($("augmented"), r.augmented, lo, hi);
    const rs = (x) => x.map(([a, b]) => `[${a}, ${b})`).join(" ") || "none";
    const warp = r.warp ? `${r.warp[0]} &rarr; ${r.warp[1]}` : "none";
    out.innerHTML = `${r.samples} samples, ${r.clean.frames} frames &times; ${r.clean.dims} mels. ` +
      `Warp ${warp}; freq masks ${rs(r.freq_masks)}; time masks ${rs(r.time_masks)}`;
  });
}

await init();
for (const id of ["ref", "hyp"]) $(id).addEventListener("input", runAlign);
for (const id of ["systems", "en", "null"]) $(id).addEventListener("input", runVote);
for (const id of ["speed", "fm", "fw", "tm", "tw", "ww", "mean", "aug-seed"]) $(id).addEventListener("input", runAugment);
$("sweep-run").addEventListener("click", runSweep);
runAlign();
runVote();
runAugment();
runSweep();
