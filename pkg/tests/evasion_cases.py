"""Declarative evasion-coverage table shared by the map tests and the
acceptance gate.

Each case pairs one manipulation with one feature it is advertised to
evade, a fixture builder making that feature non-benign, and an expected
outcome:

  flip        feature reaches -1 after one application
  reduce      the underlying suspicious ratio strictly decreases
  observed:*  recorded direction for the contradiction pairs (see
              test_evasion_map's module docstring)
"""

from dataclasses import dataclass
from typing import Callable

from phishevade import features as F
from phishevade.features import SET_A, SET_B, census

from pages import page_of

EXT = "http://elsewhere.test"


def ext_imgs(n):
    return "".join(f'<img src="{EXT}/i{k}.png">' for k in range(n))


def int_imgs(n):
    return "".join(f'<img src="/i{k}.png">' for k in range(n))


def ext_ratio(tags):
    def metric(page):
        c = census(page, tags)
        return c.n_ext / c.total if c.total else 0.0
    return metric


@dataclass(frozen=True)
class Case:
    manipulation: str
    feature: str
    build: Callable
    expect: str  # "flip" | "reduce" | "observed:up" | "observed:same"
    feature_fn: Callable = None
    metric: Callable = None

    def fn(self):
        return self.feature_fn or getattr(F, "f_" + self.feature.split("_", 1)[1])


CASES = [
    Case("InjectIntElem", "HTML_freqDom", lambda: page_of(ext_imgs(5)), "flip"),
    Case("InjectIntElem", "HTML_objectRatio", lambda: page_of(ext_imgs(5)),
         "reduce", metric=ext_ratio(SET_A)),
    Case("InjectIntElem", "HTML_commPage", lambda: page_of(ext_imgs(5)),
         "reduce", metric=F.f_commPage),
    Case("InjectIntElem", "HTML_nullLnkWeb", lambda: page_of(ext_imgs(5)),
         "observed:up", metric=F.f_nullLnkWeb),
    Case("InjectIntElemFoot", "HTML_commPageFoot",
         lambda: page_of(f"<footer>{ext_imgs(4)}</footer>"),
         "reduce", metric=F.f_commPageFoot),
    Case("InjectIntElemFoot", "HTML_nullLnkFooter",
         lambda: page_of(f"<footer>{ext_imgs(4)}</footer>"),
         "observed:up", metric=F.f_nullLnkFooter),
    Case("InjectIntLinkElem", "HTML_metaScripts",
         lambda: page_of("".join(f'<script src="{EXT}/s{k}.js"></script>'
                                 for k in range(5))), "flip"),
    Case("InjectExtElem", "HTML_commPage", lambda: page_of(int_imgs(10)),
         "reduce", metric=F.f_commPage),
    Case("InjectExtElem", "HTML_freqDom",
         lambda: page_of(ext_imgs(3) + int_imgs(1)),
         "observed:up", metric=ext_ratio(SET_A)),
    Case("InjectExtElem", "HTML_objectRatio",
         lambda: page_of(ext_imgs(3) + int_imgs(1)),
         "observed:up", metric=ext_ratio(SET_A)),
    Case("InjectExtElem", "HTML_metaScripts",
         lambda: page_of(f'<script src="{EXT}/s1.js"></script>'
                         f'<script src="{EXT}/s2.js"></script>'
                         '<meta name="a" content="b">'),
         "observed:up", metric=ext_ratio(SET_B)),
    Case("InjectExtElemFoot", "HTML_commPageFoot",
         lambda: page_of(f"<footer>{int_imgs(10)}</footer>"),
         "reduce", metric=F.f_commPageFoot),
    Case("UpdateForm", "HTML_SFH",
         lambda: page_of('<form action=""><input></form>'), "flip"),
    Case("UpdateForm", "HTML_loginForm",
         lambda: page_of('<form action="#null"><input></form>'), "flip"),
    Case("ObfuscateExtLinks", "HTML_SFH",
         lambda: page_of(f'<form action="{EXT}/post"><input></form>'), "flip"),
    Case("ObfuscateExtLinks", "HTML_loginForm",
         lambda: page_of(f'<form action="{EXT}/post"><input></form>'), "flip"),
    Case("ObfuscateExtLinks", "HTML_anchors",
         lambda: page_of("".join(f'<a href="{EXT}/{k}">x</a>' for k in range(6))
                         + '<a href="/ok">y</a>' * 4), "flip"),
    Case("ObfuscateExtLinks", "HTML_css",
         lambda: page_of("", head=f'<link rel="stylesheet" href="{EXT}/s.css">'), "flip"),
    Case("ObfuscateExtLinks", "HTML_favicon",
         lambda: page_of("", head=f'<link rel="icon" href="{EXT}/f.ico">'), "flip"),
    Case("ObfuscateJS", "HTML_statBar",
         lambda: page_of('<script>window.status = "x";</script>'), "flip"),
    Case("ObfuscateJS", "HTML_rightClick",
         lambda: page_of("<script>document.addEventListener('contextmenu', "
                         "function (e) { e.preventDefault(); });</script>"), "flip"),
    Case("ObfuscateJS", "HTML_popUP",
         lambda: page_of('<script>window.open("http://x.test");</script>'), "flip"),
    Case("InjectFakeCopyright", "HTML_domCopyright",
         lambda: page_of("<p>plain</p>"), "flip"),
    Case("UpdateIntAnchors", "HTML_anchors",
         lambda: page_of('<a href="#">m</a>' * 6 + '<a href="/x">k</a>' * 4), "flip"),
    Case("UpdateIntAnchors", "HTML_nullLnkWeb",
         lambda: page_of('<a href="#">m</a>' * 6 + '<a href="/x">k</a>' * 4),
         "observed:same", metric=F.f_nullLnkWeb),
    Case("UpdateIntAnchors", "HTML_nullLnkFooter",
         lambda: page_of('<footer><a href="#skip">m</a></footer>'),
         "observed:same", metric=F.f_nullLnkFooter),
    Case("UpdateHiddenDivs", "HTML_hiddenDiv",
         lambda: page_of('<div style="display:none">x</div>'
                         '<div style="visibility: hidden">y</div>'), "flip"),
    Case("UpdateHiddenButtons", "HTML_hiddenButton",
         lambda: page_of("<button disabled>x</button>"), "flip"),
    Case("UpdateHiddenInputs", "HTML_hiddenInput",
         lambda: page_of('<input type="hidden"><input disabled>'), "flip"),
    Case("UpdateTitle", "HTML_URLBrand",
         lambda: page_of("", head="<title>Login</title>"), "flip"),
    Case("UpdateIFrames", "HTML_iFrame",
         lambda: page_of('<iframe style="display: none"></iframe>'), "flip"),
    Case("InjectFakeFavicon", "HTML_favicon", lambda: page_of(""), "flip"),
]

# The null-anchor ratio features count plain internal anchors as
# suspicious, and injecting external elements cannot lower an
# external/total ratio; the affected advertised pairs are recorded with
# their observed direction instead of a pass requirement.
PARADOX_EXPECTS = {"observed:up", "observed:same"}


def run_case(case: Case, apply_fn) -> str:
    """Execute one case; returns the outcome label, raises on violation."""
    before_page = case.build()
    after_page = apply_fn(before_page, case.manipulation)
    fn = case.fn()
    before, after = fn(before_page), fn(after_page)
    assert before != -1, f"{case.manipulation}/{case.feature}: fixture must start non-benign"
    if case.expect == "flip":
        assert after == -1, (case.manipulation, case.feature, before, after)
        return "flipped to benign"
    m_before, m_after = case.metric(before_page), case.metric(after_page)
    if case.expect == "reduce":
        assert m_after < m_before, (case.manipulation, case.feature, m_before, m_after)
        return f"ratio {m_before:.3f} -> {m_after:.3f}"
    if case.expect == "observed:up":
        assert m_after > m_before, (case.manipulation, case.feature, m_before, m_after)
        return f"recorded: ratio rises {m_before:.3f} -> {m_after:.3f}"
    if case.expect == "observed:same":
        assert m_after == m_before, (case.manipulation, case.feature, m_before, m_after)
        return f"recorded: ratio unchanged at {m_before:.3f}"
    raise AssertionError(f"unknown expectation {case.expect}")
