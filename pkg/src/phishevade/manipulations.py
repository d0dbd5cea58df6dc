"""Functionality- and rendering-preserving page rewrites.

Each manipulation is a pure page -> page transform: the original page is
never touched, visible content is never altered, and any live attribute a
rewrite changes is restored at load time by an injected head script. Every
manipulation is a no-op when its target pattern is absent.

Single-round (SR) manipulations are idempotent; multi-round (MR) ones are
the injection manipulations, which grow the page by a fixed number of
hidden elements per application and can be stacked across rounds.
"""

from __future__ import annotations

import base64
import json
import random
import re
from dataclasses import dataclass
from enum import Enum
from importlib import resources

from . import features as F
from .dom import Element, HtmlPage, LinkClass, Text, classify_link

SR = "SR"
MR = "MR"

# Table order: the injection (multi-round) block first, then the
# single-round block. SR execution follows this order.
MR_NAMES = (
    "InjectIntElem",
    "InjectIntElemFoot",
    "InjectIntLinkElem",
    "InjectExtElem",
    "InjectExtElemFoot",
)
SR_NAMES = (
    "UpdateForm",
    "ObfuscateExtLinks",
    "ObfuscateJS",
    "InjectFakeCopyright",
    "UpdateIntAnchors",
    "UpdateHiddenDivs",
    "UpdateHiddenButtons",
    "UpdateHiddenInputs",
    "UpdateTitle",
    "UpdateIFrames",
    "InjectFakeFavicon",
)
MANIPULATION_NAMES = MR_NAMES + SR_NAMES

INJECTION_COUNT = 10  # elements added per application of an injection
FIXED_BASELINE_COUNT = 50  # the knowledge-free baseline's anchor count

# Replacement tokens that none of the features treat as suspicious.
SAFE_ACTION_TOKENS = ("#!", "#none")
SAFE_LINK_TOKEN = "#!"

OBFUSCATED_JS_PATTERNS = (
    "prompt(", "window.open(", "window.status", "preventDefault()", "oncontextmenu",
)


class HidingStrategy(Enum):
    HIDDEN_ATTR = "hidden_attr"  # default
    INLINE_STYLE = "inline_style"
    STYLE_ELEMENT = "style_element"
    NOSCRIPT = "noscript"


@dataclass(frozen=True)
class ExternalLinkPool:
    """Absolute URLs of well-known hosts used for external injections."""

    urls: tuple[str, ...]

    def __post_init__(self):
        if not self.urls:
            raise ValueError("external link pool must not be empty")

    @classmethod
    def from_file(cls, path) -> "ExternalLinkPool":
        with open(path, encoding="utf-8") as fh:
            urls = tuple(line.strip() for line in fh if line.strip())
        return cls(urls)

    @classmethod
    def bundled(cls) -> "ExternalLinkPool":
        text = resources.files("phishevade").joinpath("data/external_links.txt").read_text()
        return cls(tuple(line.strip() for line in text.splitlines() if line.strip()))


_default_pool: ExternalLinkPool | None = None


def default_pool() -> ExternalLinkPool:
    global _default_pool
    if _default_pool is None:
        _default_pool = ExternalLinkPool.bundled()
    return _default_pool


@dataclass(frozen=True)
class Manipulation:
    """An identified page transform, with the context its handler may need."""

    name: str
    kind: str
    rng_seed: int = 0
    pool: ExternalLinkPool | None = None
    provider: object | None = None

    def __post_init__(self):
        if self.name not in MANIPULATION_NAMES:
            raise ValueError(f"unknown manipulation {self.name!r}")
        expected = MR if self.name in MR_NAMES else SR
        if self.kind != expected:
            raise ValueError(f"{self.name} is {expected}, not {self.kind}")


def manipulation(name: str, rng_seed: int = 0, pool=None, provider=None) -> Manipulation:
    kind = MR if name in MR_NAMES else SR
    return Manipulation(name, kind, rng_seed, pool, provider)


def default_sr_set(rng_seed: int = 0, provider=None) -> list[Manipulation]:
    return [manipulation(n, rng_seed, provider=provider) for n in SR_NAMES]


def default_mr_set(rng_seed: int = 0, pool=None) -> list[Manipulation]:
    return [manipulation(n, rng_seed, pool=pool) for n in MR_NAMES]


# ---------------------------------------------------------------------------
# shared rewrite machinery
# ---------------------------------------------------------------------------

def base64_encode(text: str) -> str:
    return base64.b64encode(text.encode("utf-8")).decode("ascii")


def base64_decode(text: str) -> str:
    return base64.b64decode(text.encode("ascii")).decode("utf-8")


def _page_rng(page: HtmlPage, m: Manipulation) -> random.Random:
    # Keyed on page counters so repeated applications draw fresh values
    # while the whole attack stays reproducible for a fixed seed.
    return random.Random(f"{m.name}:{m.rng_seed}:{page._id_seq}:{page._href_seq}")


def hide_element(page: HtmlPage, el: Element, strategy: HidingStrategy = HidingStrategy.HIDDEN_ATTR):
    """Keep el out of the rendered output without removing it."""
    if strategy is HidingStrategy.HIDDEN_ATTR:
        el.set_attr("hidden", None)
    elif strategy is HidingStrategy.INLINE_STYLE:
        existing = el.get("style")
        el.set_attr("style", f"{existing.rstrip().rstrip(';')}; display:none" if existing else "display:none")
    elif strategy is HidingStrategy.STYLE_ELEMENT:
        el_id = page.ensure_id(el)
        _append_style_rules(page, [f"#{el_id} {{display: none;}}"])
    elif strategy is HidingStrategy.NOSCRIPT:
        parent = el.parent
        wrapper = Element("noscript")
        parent.replace_child(el, wrapper)
        wrapper.append(el)
    else:
        raise ValueError(f"unknown hiding strategy {strategy!r}")


def _append_style_rules(page: HtmlPage, rules: list[str]):
    style = Element("style")
    style.append(Text("\n" + "\n".join(rules) + "\n"))
    page.head.append(style)


def _append_head_script(page: HtmlPage, body: str):
    script = Element("script", {"type": "text/javascript"})
    script.append(Text(body))
    page.head.append(script)


def _restore_script(entries: list[tuple[str, str, str]]) -> str:
    """One load-time script re-applying the original attribute values.

    addEventListener (rather than assigning window.onload) keeps stacked
    manipulations from clobbering each other's restorations.
    """
    lines = ["window.addEventListener(\"load\", function () {"]
    for el_id, attr, value in entries:
        lines.append(
            f"document.getElementById({json.dumps(el_id)})"
            f".setAttribute({json.dumps(attr)}, {json.dumps(value)});"
        )
    lines.append("});")
    return "\n" + "\n".join(lines) + "\n"


def _rewrite_and_restore(page: HtmlPage, targets: list[tuple[Element, str]], token: str):
    """Point each (element, attr) at token; restore the original on load."""
    entries = []
    for el, attr in targets:
        original = el.get(attr)
        el.set_attr(attr, token)
        entries.append((page.ensure_id(el), attr, original if original is not None else ""))
    if entries:
        _append_head_script(page, _restore_script(entries))


_STYLE_DECL_RES = {
    "display:none": re.compile(r"^\s*display\s*:\s*none\s*$", re.IGNORECASE),
    "visibility:hidden": re.compile(r"^\s*visibility\s*:\s*hidden\s*$", re.IGNORECASE),
}


def _split_style(style: str) -> list[str]:
    return [decl for decl in style.split(";") if decl.strip()]


def _strip_style_decl(el: Element, pattern_key: str) -> bool:
    """Drop a matching declaration from el's style attr; True if dropped."""
    style = el.get("style")
    if not style:
        return False
    regex = _STYLE_DECL_RES[pattern_key]
    decls = _split_style(style)
    kept = [d for d in decls if not regex.match(d)]
    if len(kept) == len(decls):
        return False
    if kept:
        el.set_attr("style", "; ".join(d.strip() for d in kept))
    else:
        el.del_attr("style")
    return True


# ---------------------------------------------------------------------------
# injection manipulations (multi-round)
# ---------------------------------------------------------------------------

def _inject_hidden(page: HtmlPage, container: Element, tag: str, hrefs):
    for href in hrefs:
        el = Element(tag, {"href": href})
        hide_element(page, el, HidingStrategy.HIDDEN_ATTR)
        container.append(el)


def _internal_hrefs(page: HtmlPage, count: int) -> list[str]:
    return [page.next_internal_href() for _ in range(count)]


def _external_hrefs(page: HtmlPage, m: Manipulation, count: int) -> list[str]:
    pool = m.pool or default_pool()
    rng = _page_rng(page, m)
    # Reserve counter slots so stacked applications draw fresh URLs.
    page._href_seq += count
    return [rng.choice(pool.urls) for _ in range(count)]


def _inject_int_elem(page, m):
    _inject_hidden(page, page.body, "a", _internal_hrefs(page, INJECTION_COUNT))


def _inject_int_elem_foot(page, m):
    _inject_hidden(page, page.ensure_footer(), "a", _internal_hrefs(page, INJECTION_COUNT))


def _inject_int_link_elem(page, m):
    _inject_hidden(page, page.body, "link", _internal_hrefs(page, INJECTION_COUNT))


def _inject_ext_elem(page, m):
    _inject_hidden(page, page.body, "link", _external_hrefs(page, m, INJECTION_COUNT))


def _inject_ext_elem_foot(page, m):
    _inject_hidden(page, page.ensure_footer(), "link", _external_hrefs(page, m, INJECTION_COUNT))


# ---------------------------------------------------------------------------
# single-round manipulations
# ---------------------------------------------------------------------------

def _update_form(page, m):
    rng = _page_rng(page, m)
    for form in page.select({"form"}):
        if not form.has_attr("action"):
            continue
        action = form.get("action")
        cls = classify_link(action, page)
        useless = cls in (LinkClass.USELESS_INTERNAL, LinkClass.EMPTY)
        if useless or (action or "").strip().lower() == "about:blank":
            form.set_attr("action", rng.choice(SAFE_ACTION_TOKENS))


def _obfuscate_ext_links(page, m):
    provider = m.provider or F.AllReachable()
    targets: list[tuple[Element, str]] = []
    seen: set[int] = set()

    def add(el, attr):
        key = id(el)
        if key not in seen:
            seen.add(key)
            targets.append((el, attr))

    for form in page.select({"form"}):
        if form.has_attr("action") and classify_link(form.get("action"), page) is LinkClass.EXTERNAL:
            add(form, "action")
    for a in page.select({"a"}):
        if a.has_attr("href") and classify_link(a.get("href"), page) is LinkClass.EXTERNAL:
            add(a, "href")
    for link in F.stylesheet_links(page) + F.favicon_links(page):
        if classify_link(link.get("href"), page) is LinkClass.EXTERNAL:
            add(link, "href")
    for el in page.select(F.SET_AB):
        link = F.element_link(el)
        if link is not None and classify_link(link, page) is LinkClass.EXTERNAL \
                and not provider.lookup(link):
            add(el, F.LINK_ATTR[el.tag])

    _rewrite_and_restore(page, targets, SAFE_LINK_TOKEN)


def _obfuscate_js(page, m):
    for script in page.select({"script"}):
        text = script.text
        if not text or not any(p in text for p in OBFUSCATED_JS_PATTERNS):
            continue
        encoded = base64_encode(text.strip())
        # Block-scoped so several rewritten scripts can coexist on one page.
        loader = (
            "\n{\n"
            "let script = document.createElement(\"script\");\n"
            f"script.innerHTML = atob(\"{encoded}\");\n"
            "document.head.append(script);\n"
            "}\n"
        )
        script.set_text(loader)


def _inject_fake_copyright(page, m):
    if F.f_domCopyright(page) == -1:
        return
    notice = Element("p", {"hidden": None})
    notice.append(Text(f"© Copyright {page.domain}"))
    page.body.append(notice)


def _update_int_anchors(page, m):
    for a in page.select({"a"}):
        if a.has_attr("href") and classify_link(a.get("href"), page) is LinkClass.USELESS_INTERNAL:
            a.set_attr("href", SAFE_LINK_TOKEN)


def _update_hidden_styles(page, tag):
    """display:none -> hidden attribute; visibility:hidden -> head CSS rule."""
    rules = []
    for el in page.select({tag}):
        if _strip_style_decl(el, "display:none"):
            el.set_attr("hidden", None)
        if _strip_style_decl(el, "visibility:hidden"):
            el_id = page.ensure_id(el)
            rules.append(f"#{el_id} {{visibility: hidden;}}")
    if rules:
        _append_style_rules(page, rules)


def _update_hidden_divs(page, m):
    _update_hidden_styles(page, "div")


def _update_iframes(page, m):
    _update_hidden_styles(page, "iframe")


def _reenable_on_load(page, elements):
    entries = []
    for el in elements:
        original = el.get("disabled")
        el.del_attr("disabled")
        entries.append((page.ensure_id(el), "disabled", original if original is not None else ""))
    if entries:
        _append_head_script(page, _restore_script(entries))


def _update_hidden_buttons(page, m):
    _reenable_on_load(page, [b for b in page.select({"button"}) if b.has_attr("disabled")])


def _update_hidden_inputs(page, m):
    disabled = []
    for el in page.select({"input"}):
        if (el.get("type") or "").strip().lower() == "hidden":
            el.set_attr("type", "text")
            el.set_attr("hidden", None)
        if el.has_attr("disabled"):
            disabled.append(el)
    _reenable_on_load(page, disabled)


def _update_title(page, m):
    title = page.root.find("title")
    original = title.text if title is not None else ""
    if page.domain.lower() in original.lower():
        return
    if title is None:
        title = Element("title")
        page.head.insert(0, title)
    title.set_text(page.domain)
    _append_head_script(
        page,
        "\nwindow.addEventListener(\"load\", function () {\n"
        f"document.title = {json.dumps(original)};\n"
        "});\n",
    )


def _inject_fake_favicon(page, m):
    if F.favicon_links(page):
        return
    page.head.append(Element("link", {"rel": "icon", "href": "#none"}))


_HANDLERS = {
    "InjectIntElem": _inject_int_elem,
    "InjectIntElemFoot": _inject_int_elem_foot,
    "InjectIntLinkElem": _inject_int_link_elem,
    "InjectExtElem": _inject_ext_elem,
    "InjectExtElemFoot": _inject_ext_elem_foot,
    "UpdateForm": _update_form,
    "ObfuscateExtLinks": _obfuscate_ext_links,
    "ObfuscateJS": _obfuscate_js,
    "InjectFakeCopyright": _inject_fake_copyright,
    "UpdateIntAnchors": _update_int_anchors,
    "UpdateHiddenDivs": _update_hidden_divs,
    "UpdateHiddenButtons": _update_hidden_buttons,
    "UpdateHiddenInputs": _update_hidden_inputs,
    "UpdateTitle": _update_title,
    "UpdateIFrames": _update_iframes,
    "InjectFakeFavicon": _inject_fake_favicon,
}


def apply(page: HtmlPage, m: Manipulation) -> HtmlPage:
    """Apply one manipulation to a copy of the page; the input is untouched."""
    result = page.clone()
    _HANDLERS[m.name](result, m)
    return result
