import init, { trajectory, certify, circles } from "./pkg/magtorus_web.js";

const num = (id) => parseFloat(document.getElementById(id).value);

function showCertificate() {
  const out = document.getElementById("cert-out");
  try {
    const c = JSON.parse(certify(num("a0"), num("amp"), 1.0));
    if (c.resonant) {
      out.textContent = "resonant: " + c.reason;
      return;
    }
    const ranks = Object.entries(c.ranks).map(([j, r]) => `${j}:${r}`).join(", ");
    out.textContent =
      `k = ${c.k.join(", ")}   eps = ${c.epsilon.toFixed(6)}\n` +
      `tau*a in [${c.b_lo[0].toFixed(6)}, ${c.b_hi[0].toFixed(6)}]\n` +
      `ranks {${ranks}}   expect >= ${c.min_count}, generically >= ${c.generic_count} contractible orbits`;
  } catch (e) {
    out.textContent = String(e);
  }
}

// Draws the lifted path folded into the unit square.
function drawTrajectory() {
  const cv = document.getElementById("torus");
  const g = cv.getContext("2d");
  const msg = document.getElementById("trace-msg");
  g.clearRect(0, 0, cv.width, cv.height);
  let xs;
  try {
    xs = trajectory(num("a0"), num("amp"), num("vamp"), num("x1"), num("x2"), num("p1"), num("p2"), num("tend"), 4000);
  } catch (e) {
    msg.textContent = String(e);
    return;
  }
  const s = cv.width;
  const wrap = (v) => v - Math.floor(v);
  g.strokeStyle = "#1f5fa8";
  g.lineWidth = 1.2;
  g.beginPath();
  for (let i = 0; i < xs.length; i += 2) {
    const u = wrap(xs[i]), w = wrap(xs[i + 1]);
    const px = u * s, py = (1 - w) * s;
    const jump = i > 0 && (Math.abs(u - wrap(xs[i - 2])) > 0.5 || Math.abs(w - wrap(xs[i - 1])) > 0.5);
    // pen up where the path leaves through an edge of the square
    if (i === 0 || jump) g.moveTo(px, py);
    else g.lineTo(px, py);
  }
  g.stroke();
  const n = xs.length;
  msg.textContent = `end (lifted): (${xs[n - 2].toFixed(4)}, ${xs[n - 1].toFixed(4)})`;
}

function drawCircles() {
  const cv = document.getElementById("action");
  const g = cv.getContext("2d");
  const out = document.getElementById("circ-out");
  g.clearRect(0, 0, cv.width, cv.height);
  let c;
  try {
    c = JSON.parse(circles(num("a0"), num("rmax"), 200));
  } catch (e) {
    out.textContent = String(e);
    return;
  }
  const lo = Math.min(0, ...c.actions), hi = Math.max(0, ...c.actions);
  const span = hi - lo || 1;
  const X = (r) => 20 + (r / c.radii[c.radii.length - 1]) * (cv.width - 30);
  const Y = (a) => 10 + (1 - (a - lo) / span) * (cv.height - 20);
  g.strokeStyle = "#aaa";
  g.beginPath();
  g.moveTo(X(0), Y(0));
  g.lineTo(X(c.radii[c.radii.length - 1]), Y(0));
  g.stroke();
  g.strokeStyle = "#b0412e";
  g.beginPath();
  c.radii.forEach((r, i) => (i ? g.lineTo(X(r), Y(c.actions[i])) : g.moveTo(X(r), Y(c.actions[i]))));
  g.stroke();
  out.textContent =
    `S(R) = ${c.slope.toFixed(4)}·R²\n` +
    `constant loop: index ${c.morse_index}, nullity ${c.nullity}, mu = ${c.mu}`;
}

await init();
document.getElementById("cert").onclick = showCertificate;
document.getElementById("trace").onclick = drawTrajectory;
document.getElementById("circ").onclick = drawCircles;
showCertificate();
drawTrajectory();
drawCircles();
