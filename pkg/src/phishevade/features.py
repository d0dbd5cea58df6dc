"""The 22 HTML detection features and their vector form.

Every feature is a pure function of (page, link-status provider). Ternary
features take values in {-1, 0, +1} (-1 leaning benign, +1 leaning
phishing); the five ratio features take values in [0, 1] and fall back to 0
when their population is empty. Extraction is total: no feature ever raises
on a parseable page.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field

from .dom import Element, HtmlPage, LinkClass, classify_link, serialize

# Element families inspected by the census-style features: SET_A covers
# anchors/images/links/videos, SET_B covers scripts/meta/links, SET_AB both.
SET_A = frozenset({"a", "img", "link", "video"})
SET_B = frozenset({"script", "meta", "link"})
SET_AB = SET_A | SET_B

# Attribute that carries each tag's reference.
LINK_ATTR = {
    "a": "href",
    "link": "href",
    "img": "src",
    "video": "src",
    "script": "src",
    "iframe": "src",
    "meta": "content",
    "form": "action",
}

# Fragment patterns the null-anchor features treat as suspicious.
NULL_ANCHOR_PATTERNS = frozenset({"#", "#content", "#skip", "javascript ::void(0)"})

OBJECT_RATIO_SUSP = 0.15
OBJECT_RATIO_PHISH = 0.30
META_SCRIPTS_SUSP = 0.52
META_SCRIPTS_PHISH = 0.61
SFH_SUSP = 0.5
SFH_PHISH = 0.75
ANCHORS_SUSP = 0.32
ANCHORS_PHISH = 0.505

_STYLE_HIDDEN_RE = re.compile(r"(?:visibility\s*:\s*hidden|display\s*:\s*none)", re.IGNORECASE)


class AllReachable:
    """Default offline link-status provider: nothing is ever broken."""

    def lookup(self, url: str) -> bool:
        return True


class StaticLinkStatus:
    """Provider backed by an explicit set of broken URLs."""

    def __init__(self, broken: set[str]):
        self.broken = set(broken)

    def lookup(self, url: str) -> bool:
        return url not in self.broken


@dataclass
class ElementCensus:
    n_int: int = 0
    n_ext: int = 0

    @property
    def total(self) -> int:
        return self.n_int + self.n_ext


def element_link(el: Element) -> str | None:
    attr = LINK_ATTR.get(el.tag)
    return el.get(attr) if attr else None


def census(page: HtmlPage, tags, region: str = "whole") -> ElementCensus:
    """Count internal vs external elements of the given tags in a region.

    An element is external iff its link attribute resolves to a host other
    than the page's; elements with no link, empty links, fragments, and
    pseudo-URLs all count as internal.
    """
    counts = ElementCensus()
    for el in page.select(tags, region):
        link = element_link(el)
        if link is not None and classify_link(link, page) is LinkClass.EXTERNAL:
            counts.n_ext += 1
        else:
            counts.n_int += 1
    return counts


def _normalized(href: str | None) -> str:
    return (href or "").strip().lower()


# ---------------------------------------------------------------------------
# individual features
# ---------------------------------------------------------------------------

def f_freqDom(page: HtmlPage) -> int:
    c = census(page, SET_A)
    return -1 if c.n_ext == 0 or c.n_int >= c.n_ext else 1


def threshold_band(ratio: float, susp: float, phish: float) -> int:
    """-1 below the suspicious threshold, +1 above the phishing threshold,
    0 on the closed interval between them."""
    if ratio < susp:
        return -1
    if ratio > phish:
        return 1
    return 0


def _banded_ratio(c: ElementCensus, susp: float, phish: float) -> int:
    if c.total == 0:
        return -1
    return threshold_band(c.n_ext / c.total, susp, phish)


def f_objectRatio(page: HtmlPage) -> int:
    return _banded_ratio(census(page, SET_A), OBJECT_RATIO_SUSP, OBJECT_RATIO_PHISH)


def f_metaScripts(page: HtmlPage) -> int:
    return _banded_ratio(census(page, SET_B), META_SCRIPTS_SUSP, META_SCRIPTS_PHISH)


def _commonality(c: ElementCensus) -> float:
    if c.total == 0:
        return 0.0
    return max(c.n_ext, c.n_int) / c.total


def f_commPage(page: HtmlPage) -> float:
    return _commonality(census(page, SET_AB, region="body"))


def f_commPageFoot(page: HtmlPage) -> float:
    return _commonality(census(page, SET_AB, region="footer"))


def is_suspicious_form(form: Element, page: HtmlPage) -> bool:
    """A form is suspicious when its action exfiltrates or goes nowhere:
    an external action, about:blank, or an explicitly empty action."""
    if not form.has_attr("action"):
        return False
    action = form.get("action")
    if _normalized(action) == "about:blank":
        return True
    cls = classify_link(action, page)
    return cls in (LinkClass.EXTERNAL, LinkClass.EMPTY)


def f_SFH(page: HtmlPage) -> int:
    forms = page.select({"form"})
    if not forms:
        return -1
    ratio = sum(is_suspicious_form(f, page) for f in forms) / len(forms)
    return threshold_band(ratio, SFH_SUSP, SFH_PHISH)


def _script_texts(page: HtmlPage):
    return (el.text for el in page.select({"script"}))


def f_popUP(page: HtmlPage) -> int:
    saw_open = False
    for text in _script_texts(page):
        if "prompt(" in text:
            return 1
        if "window.open(" in text:
            saw_open = True
    return 0 if saw_open else -1


def f_rightClick(page: HtmlPage) -> int:
    if "preventDefault()" in serialize(page):
        return 1
    for el in page.root.iter_elements():
        if _normalized(el.get("oncontextmenu")) == "return false":
            return 1
    return -1


def _copyright_nodes(page: HtmlPage):
    """Text nodes outside script/style (hidden subtrees included)."""
    from .dom import Text

    def walk(el):
        for child in el.children:
            if isinstance(child, Text):
                yield child.data
            elif isinstance(child, Element) and child.tag not in ("script", "style"):
                yield from walk(child)

    yield from walk(page.root)


def f_domCopyright(page: HtmlPage) -> int:
    label = page.domain.split(".")[0].lower()
    found = False
    for data in _copyright_nodes(page):
        if "©" not in data:
            continue
        found = True
        if label and label in data.lower():
            return -1
    return 1 if found else 0


def _null_anchor_ratio(page: HtmlPage, region: str) -> float:
    anchors = page.select({"a"}, region)
    if not anchors:
        return 0.0
    suspicious = 0
    for a in anchors:
        href = a.get("href")
        if _normalized(href) in NULL_ANCHOR_PATTERNS:
            suspicious += 1
        elif href is not None and classify_link(href, page) is LinkClass.INTERNAL:
            suspicious += 1
    return suspicious / len(anchors)


def f_nullLnkWeb(page: HtmlPage) -> float:
    return _null_anchor_ratio(page, "body")


def f_nullLnkFooter(page: HtmlPage) -> float:
    return _null_anchor_ratio(page, "footer")


def f_brokenLnk(page: HtmlPage, provider=None) -> float:
    provider = provider or AllReachable()
    external = []
    for el in page.select(SET_AB):
        link = element_link(el)
        if link is not None and classify_link(link, page) is LinkClass.EXTERNAL:
            external.append(link)
    if not external:
        return 0.0
    broken = sum(not provider.lookup(link) for link in external)
    return broken / len(external)


# The full do-nothing action list checked against login forms; the empty
# string is part of it.
def is_useless_form_action(form: Element, page: HtmlPage) -> bool:
    if not form.has_attr("action"):
        return False
    cls = classify_link(form.get("action"), page)
    return cls in (LinkClass.USELESS_INTERNAL, LinkClass.EMPTY)


def f_loginForm(page: HtmlPage) -> int:
    for form in page.select({"form"}):
        if is_useless_form_action(form, page):
            return 1
        if form.has_attr("action") and classify_link(form.get("action"), page) is LinkClass.EXTERNAL:
            return 1
    return -1


def _has_hidden_style(el: Element) -> bool:
    style = el.get("style")
    return bool(style) and bool(_STYLE_HIDDEN_RE.search(style))


def f_hiddenDiv(page: HtmlPage) -> int:
    return 1 if any(_has_hidden_style(d) for d in page.select({"div"})) else -1


def f_iFrame(page: HtmlPage) -> int:
    return 1 if any(_has_hidden_style(f) for f in page.select({"iframe"})) else -1


def f_hiddenButton(page: HtmlPage) -> int:
    return 1 if any(b.has_attr("disabled") for b in page.select({"button"})) else -1


def f_hiddenInput(page: HtmlPage) -> int:
    for el in page.select({"input"}):
        if el.has_attr("disabled") or _normalized(el.get("type")) == "hidden":
            return 1
    return -1


def f_URLBrand(page: HtmlPage) -> int:
    title = page.root.find("title")
    if title is None:
        return 0
    return -1 if page.domain.lower() in title.text.lower() else 1


def favicon_links(page: HtmlPage) -> list[Element]:
    out = []
    for link in page.select({"link"}):
        rel_tokens = _normalized(link.get("rel")).split()
        if "icon" in rel_tokens:
            out.append(link)
    return out


def f_favicon(page: HtmlPage) -> int:
    links = favicon_links(page)
    if not links:
        return 0
    for link in links:
        if classify_link(link.get("href"), page) is LinkClass.EXTERNAL:
            return 1
    return -1


def f_statBar(page: HtmlPage) -> int:
    return 1 if "window.status" in serialize(page) else -1


def stylesheet_links(page: HtmlPage) -> list[Element]:
    return [
        link for link in page.select({"link"})
        if "stylesheet" in _normalized(link.get("rel")).split()
    ]


def f_css(page: HtmlPage) -> int:
    for link in stylesheet_links(page):
        if classify_link(link.get("href"), page) is LinkClass.EXTERNAL:
            return 1
    return -1


def is_suspicious_anchor(a: Element, page: HtmlPage) -> bool:
    href = a.get("href")
    if _normalized(href) in NULL_ANCHOR_PATTERNS:
        return True
    return href is not None and classify_link(href, page) is LinkClass.EXTERNAL


def f_anchors(page: HtmlPage) -> int:
    anchors = page.select({"a"})
    if not anchors:
        return -1
    ratio = sum(is_suspicious_anchor(a, page) for a in anchors) / len(anchors)
    return threshold_band(ratio, ANCHORS_SUSP, ANCHORS_PHISH)


# ---------------------------------------------------------------------------
# the assembled vector
# ---------------------------------------------------------------------------

_EXTRACTORS = {
    "HTML_SFH": f_SFH,
    "HTML_URLBrand": f_URLBrand,
    "HTML_anchors": f_anchors,
    "HTML_brokenLnk": f_brokenLnk,
    "HTML_commPage": f_commPage,
    "HTML_commPageFoot": f_commPageFoot,
    "HTML_css": f_css,
    "HTML_domCopyright": f_domCopyright,
    "HTML_favicon": f_favicon,
    "HTML_freqDom": f_freqDom,
    "HTML_hiddenButton": f_hiddenButton,
    "HTML_hiddenDiv": f_hiddenDiv,
    "HTML_hiddenInput": f_hiddenInput,
    "HTML_iFrame": f_iFrame,
    "HTML_loginForm": f_loginForm,
    "HTML_metaScripts": f_metaScripts,
    "HTML_nullLnkFooter": f_nullLnkFooter,
    "HTML_nullLnkWeb": f_nullLnkWeb,
    "HTML_objectRatio": f_objectRatio,
    "HTML_popUP": f_popUP,
    "HTML_rightClick": f_rightClick,
    "HTML_statBar": f_statBar,
}

# Canonical vectorization order: alphabetical by feature name.
FEATURE_NAMES: tuple[str, ...] = tuple(sorted(_EXTRACTORS))

RATIO_FEATURES = frozenset({
    "HTML_brokenLnk", "HTML_commPage", "HTML_commPageFoot",
    "HTML_nullLnkFooter", "HTML_nullLnkWeb",
})

feature_order_hash = hashlib.sha256(",".join(FEATURE_NAMES).encode()).hexdigest()


@dataclass
class FeatureVector:
    """The 22 named feature values in canonical (alphabetical) order."""

    values: dict[str, float] = field(default_factory=dict)

    def __getitem__(self, name: str) -> float:
        return self.values[name]

    def as_list(self) -> list[float]:
        return [self.values[name] for name in FEATURE_NAMES]

    def to_json(self) -> str:
        return json.dumps({name: self.values[name] for name in FEATURE_NAMES})

    @staticmethod
    def csv_header() -> str:
        return ",".join(FEATURE_NAMES)

    def to_csv_row(self) -> str:
        return ",".join(repr(v) if isinstance(v, float) else str(v) for v in self.as_list())


def extract_all(page: HtmlPage, provider=None) -> FeatureVector:
    """Extract every feature; pure function of (page, provider)."""
    values: dict[str, float] = {}
    for name in FEATURE_NAMES:
        fn = _EXTRACTORS[name]
        if name == "HTML_brokenLnk":
            values[name] = fn(page, provider)
        else:
            values[name] = fn(page)
    return FeatureVector(values)
