"""Error-tolerant HTML document model: parse, query, rewrite, serialize.

Real-world phishing pages are routinely malformed, so parsing never fails:
misnested tags are auto-closed, a missing html/head/body skeleton is
synthesized, and unrepresentable attribute garbage is dropped. The tree is
mutable and serializes back to HTML that re-parses to the same tree.

There is deliberately no CSS cascade resolution, script execution, or
subresource fetching here; pages are treated as static documents.
"""

from __future__ import annotations

import hashlib
import re
from enum import Enum
from html import escape
from html.parser import HTMLParser
from urllib.parse import urlsplit

# Elements that never have children or an end tag.
VOID_ELEMENTS = frozenset({
    "area", "base", "br", "col", "embed", "hr", "img", "input", "link",
    "meta", "param", "source", "track", "wbr",
})

# Content emitted verbatim (no entity escaping) on serialization; must
# mirror the tokenizer's raw-text set so round trips are a fixed point.
RAW_TEXT_ELEMENTS = frozenset(
    getattr(HTMLParser, "CDATA_CONTENT_ELEMENTS", ("script", "style")))

# Elements allowed to live in <head>.
HEAD_ELEMENTS = frozenset({
    "title", "base", "meta", "link", "style", "script", "noscript", "template",
})

# Start tags that implicitly close an open <p>.
P_CLOSERS = frozenset({
    "address", "article", "aside", "blockquote", "details", "div", "dl",
    "fieldset", "figcaption", "figure", "footer", "form", "h1", "h2", "h3",
    "h4", "h5", "h6", "header", "hgroup", "hr", "main", "menu", "nav", "ol",
    "p", "pre", "section", "table", "ul",
})

# tag -> set of open sibling tags it implicitly closes.
SIBLING_CLOSERS = {
    "li": frozenset({"li"}),
    "dd": frozenset({"dd", "dt"}),
    "dt": frozenset({"dd", "dt"}),
    "tr": frozenset({"tr", "td", "th"}),
    "td": frozenset({"td", "th"}),
    "th": frozenset({"td", "th"}),
    "option": frozenset({"option"}),
    "optgroup": frozenset({"option", "optgroup"}),
    "tbody": frozenset({"tr", "td", "th", "thead", "tbody"}),
    "tfoot": frozenset({"tr", "td", "th", "thead", "tbody"}),
}

# Structural elements a sibling-closing scan must not cross.
_SCOPE_BOUNDARIES = frozenset({
    "html", "body", "head", "table", "tbody", "thead", "tfoot", "caption",
    "ul", "ol", "dl", "select", "button", "td", "th",
})

_ATTR_NAME_RE = re.compile(r"^[^\s\"'>/=]+$")

# Fragment and javascript-pseudo links that navigate nowhere; union of the
# null-anchor patterns and the useless form-action patterns, all compared
# case-insensitively after trimming.
USELESS_LINK_PATTERNS = frozenset({
    "#", "#content", "#skip", "#nothing", "#null", "#void", "#doesnotexist",
    "#whatever", "javascript", "javascript::;", "javascript::void(0)",
    "javascript::void(0);", "javascript ::void(0)",
})


class LinkClass(Enum):
    """How an href/src value relates to the page hosting it."""

    INTERNAL = "internal"
    EXTERNAL = "external"
    USELESS_INTERNAL = "useless_internal"
    EMPTY = "empty"


class Node:
    __slots__ = ("parent",)

    def __init__(self):
        self.parent = None


class Text(Node):
    __slots__ = ("data",)

    def __init__(self, data: str):
        super().__init__()
        self.data = data

    def __repr__(self):
        return f"Text({self.data!r})"


class Comment(Node):
    __slots__ = ("data",)

    def __init__(self, data: str):
        super().__init__()
        self.data = data

    def __repr__(self):
        return f"Comment({self.data!r})"


class Element(Node):
    """A tag with ordered attributes and child nodes.

    Attribute values are strings, or None for boolean attributes such as
    ``hidden``. Attribute names are unique per element; duplicates in the
    source resolve last-write-wins at parse time.
    """

    __slots__ = ("tag", "attrs", "children")

    def __init__(self, tag: str, attrs: dict[str, str | None] | None = None):
        super().__init__()
        self.tag = tag
        self.attrs = dict(attrs) if attrs else {}
        self.children: list[Node] = []

    def __repr__(self):
        return f"Element(<{self.tag}> {len(self.children)} children)"

    # -- attribute helpers -------------------------------------------------

    def get(self, name: str, default=None):
        return self.attrs.get(name, default)

    def has_attr(self, name: str) -> bool:
        return name in self.attrs

    def set_attr(self, name: str, value: str | None):
        self.attrs[name] = value

    def del_attr(self, name: str):
        self.attrs.pop(name, None)

    # -- tree helpers ------------------------------------------------------

    def append(self, node: Node):
        node.parent = self
        self.children.append(node)

    def insert(self, index: int, node: Node):
        node.parent = self
        self.children.insert(index, node)

    def append_text(self, data: str):
        if self.children and isinstance(self.children[-1], Text):
            self.children[-1].data += data
        else:
            self.append(Text(data))

    def detach(self):
        if self.parent is not None:
            self.parent.children.remove(self)
            self.parent = None

    def replace_child(self, old: Node, new: Node):
        idx = self.children.index(old)
        old.parent = None
        new.parent = self
        self.children[idx] = new

    def iter_elements(self):
        """Yield descendant elements in document order (self excluded)."""
        for child in self.children:
            if isinstance(child, Element):
                yield child
                yield from child.iter_elements()

    def find_all(self, tags=None):
        if tags is not None and not isinstance(tags, (set, frozenset)):
            tags = {tags} if isinstance(tags, str) else set(tags)
        return [el for el in self.iter_elements() if tags is None or el.tag in tags]

    def find(self, tag: str):
        for el in self.iter_elements():
            if el.tag == tag:
                return el
        return None

    @property
    def text(self) -> str:
        """Concatenated descendant text content."""
        parts = []

        def walk(el):
            for child in el.children:
                if isinstance(child, Text):
                    parts.append(child.data)
                elif isinstance(child, Element):
                    walk(child)

        walk(self)
        return "".join(parts)

    def set_text(self, data: str):
        for child in self.children:
            child.parent = None
        self.children = []
        if data:
            self.append(Text(data))

    def clone(self) -> "Element":
        dup = Element(self.tag, self.attrs)
        for child in self.children:
            if isinstance(child, Element):
                dup.append(child.clone())
            elif isinstance(child, Text):
                dup.append(Text(child.data))
            elif isinstance(child, Comment):
                dup.append(Comment(child.data))
        return dup


def registrable_host(url: str) -> str:
    """Lowercased host with any leading ``www.`` stripped; '' if absent."""
    try:
        host = urlsplit(url.strip()).hostname or ""
    except ValueError:
        return ""
    host = host.lower().rstrip(".")
    if host.startswith("www.") and len(host) > 4:
        host = host[4:]
    return host


class HtmlPage:
    """A parsed, mutable HTML document plus its origin URL.

    Pages are values: clone() produces an independent tree, and nothing here
    shares mutable state across pages. The generated-id and synthetic-href
    counters live on the page so rewrites stay collision-free across
    sequential transformations of the same document.
    """

    def __init__(self, root: Element, page_url: str, doctype: str | None = None):
        host = registrable_host(page_url)
        split = urlsplit(page_url)
        if not split.scheme or not host:
            raise ValueError(f"page_url must be an absolute URL, got {page_url!r}")
        self.root = root
        self.page_url = page_url
        self.domain = host
        self.doctype = doctype
        self._id_seq = 0
        self._href_seq = 0

    # -- structure accessors ----------------------------------------------

    @property
    def head(self) -> Element:
        for child in self.root.children:
            if isinstance(child, Element) and child.tag == "head":
                return child
        head = Element("head")
        self.root.insert(0, head)
        return head

    @property
    def body(self) -> Element:
        for child in self.root.children:
            if isinstance(child, Element) and child.tag == "body":
                return child
        body = Element("body")
        self.root.append(body)
        return body

    def clone(self) -> "HtmlPage":
        page = HtmlPage.__new__(HtmlPage)
        page.root = self.root.clone()
        page.page_url = self.page_url
        page.domain = self.domain
        page.doctype = self.doctype
        page._id_seq = self._id_seq
        page._href_seq = self._href_seq
        return page

    # -- rewrite support ----------------------------------------------------

    def ensure_id(self, el: Element) -> str:
        """Return el's id, assigning the next generated one if absent."""
        existing = el.get("id")
        if existing:
            return existing
        taken = {e.get("id") for e in self.root.iter_elements() if e.get("id")}
        while True:
            self._id_seq += 1
            candidate = f"rz-{self._id_seq}"
            if candidate not in taken:
                el.set_attr("id", candidate)
                return candidate

    def next_internal_href(self) -> str:
        """A fresh same-host relative path; never a useless fragment link."""
        self._href_seq += 1
        return f"/_r/{self._href_seq}"

    def find_footer(self) -> Element | None:
        for el in self.root.iter_elements():
            if el.tag == "footer":
                return el
        return None

    def ensure_footer(self) -> Element:
        footer = self.find_footer()
        if footer is None:
            footer = Element("footer")
            self.body.append(footer)
        return footer

    # -- queries -------------------------------------------------------------

    def select(self, tags=None, region: str = "whole") -> list[Element]:
        """Descendant elements of a document region, in document order.

        region 'footer' covers descendants of any <footer>; 'body' covers
        descendants of <body> excluding footer subtrees (and the footers
        themselves); 'head' covers the <head> subtree; 'whole' everything.
        """
        if tags is not None and not isinstance(tags, (set, frozenset)):
            tags = {tags} if isinstance(tags, str) else set(tags)

        def want(el):
            return tags is None or el.tag in tags

        if region == "whole":
            return [el for el in self.root.iter_elements() if want(el)]
        if region == "head":
            return [el for el in self.head.iter_elements() if want(el)]
        if region == "footer":
            out = []

            def walk_footer(el, inside):
                for child in el.children:
                    if not isinstance(child, Element):
                        continue
                    child_inside = inside or child.tag == "footer"
                    if inside and want(child):
                        out.append(child)
                    walk_footer(child, child_inside)

            walk_footer(self.root, False)
            return out
        if region == "body":
            out = []

            def walk_body(el):
                for child in el.children:
                    if not isinstance(child, Element):
                        continue
                    if child.tag == "footer":
                        continue
                    if want(child):
                        out.append(child)
                    walk_body(child)

            walk_body(self.body)
            return out
        raise ValueError(f"unknown region {region!r}")

    def visible_text(self) -> str:
        """Text a browser would render: body content minus hidden subtrees.

        Approximation without a CSS cascade: honors the hidden attribute,
        inline display:none / visibility:hidden, id-targeted hiding rules in
        <style> elements, and <noscript> (assumed scripting on).
        """
        hidden_ids = set()
        for style in self.root.find_all("style"):
            for match in re.finditer(
                    r"#([^\s{}]+)\s*\{[^}]*(?:display\s*:\s*none|visibility\s*:\s*hidden)",
                    style.text, re.IGNORECASE):
                hidden_ids.add(match.group(1))

        parts = []

        def is_hidden(el):
            if el.has_attr("hidden"):
                return True
            style_val = (el.get("style") or "").lower()
            if re.search(r"display\s*:\s*none", style_val):
                return True
            if re.search(r"visibility\s*:\s*hidden", style_val):
                return True
            return el.get("id") in hidden_ids

        def walk(el):
            for child in el.children:
                if isinstance(child, Text):
                    parts.append(child.data)
                elif isinstance(child, Element):
                    if child.tag in ("script", "style", "noscript") or is_hidden(child):
                        continue
                    walk(child)

        walk(self.body)
        return "".join(parts)


class _TreeBuilder(HTMLParser):
    """Streaming tree construction with HTML5-style error recovery."""

    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.doctype: str | None = None
        self.html: Element | None = None
        self.head_el: Element | None = None
        self.body_el: Element | None = None
        self.head_closed = False
        self.stack: list[Element] = []

    # -- skeleton management -------------------------------------------------

    def _ensure_html(self):
        if self.html is None:
            self.html = Element("html")
            self.stack = [self.html]

    def _open_head(self):
        self._ensure_html()
        if self.head_el is None:
            self.head_el = Element("head")
            self.html.append(self.head_el)
        return self.head_el

    def _open_body(self):
        self._ensure_html()
        if self.head_el is None:
            self._open_head()
        self.head_closed = True
        if self.body_el is None:
            self.body_el = Element("body")
            self.html.append(self.body_el)
        return self.body_el

    def _current(self) -> Element | None:
        return self.stack[-1] if len(self.stack) > 1 else None

    def _insertion_target(self, tag: str) -> Element:
        """Stack top, creating skeleton context for top-level content."""
        top = self._current()
        if top is not None:
            if top is self.head_el and tag not in HEAD_ELEMENTS:
                # Non-head content forces the head closed and the body open.
                self.stack = [self.html]
                body = self._open_body()
                self.stack.append(body)
                return body
            return top
        # Top-level content: route into head or body as HTML5 would.
        self._ensure_html()
        if not self.head_closed and tag in HEAD_ELEMENTS:
            head = self._open_head()
            self.stack.append(head)
            return head
        body = self._open_body()
        self.stack.append(body)
        return body

    # -- implied end tags ------------------------------------------------------

    def _pop_to(self, el: Element):
        while self.stack and self.stack[-1] is not el:
            self.stack.pop()
        if self.stack:
            self.stack.pop()
        if el is self.head_el:
            self.head_closed = True
        if not self.stack:
            self.stack = [self.html]

    def _close_p_in_scope(self):
        for el in reversed(self.stack):
            if el.tag == "p":
                self._pop_to(el)
                return
            if el.tag in _SCOPE_BOUNDARIES or el.tag in P_CLOSERS:
                return

    def _close_siblings(self, tag: str):
        closers = SIBLING_CLOSERS.get(tag)
        if not closers:
            return
        # Pop through the deepest matching sibling before the scope
        # boundary: a new <tr> must close the open row even when a cell is
        # still open on top of it.
        target = None
        for el in reversed(self.stack):
            if el.tag in closers:
                target = el
            elif el.tag in _SCOPE_BOUNDARIES:
                break
        if target is not None:
            self._pop_to(target)

    # -- HTMLParser callbacks ----------------------------------------------------

    @staticmethod
    def _clean_attrs(attrlist) -> dict[str, str | None]:
        attrs: dict[str, str | None] = {}
        for name, value in attrlist:
            if name and _ATTR_NAME_RE.match(name):
                attrs[name] = value
        return attrs

    def _merge_attrs(self, el: Element, attrs: dict):
        for name, value in attrs.items():
            if name not in el.attrs:
                el.attrs[name] = value

    def handle_starttag(self, tag, attrs):
        self._insert_element(tag, self._clean_attrs(attrs), self_closing=False)

    def handle_startendtag(self, tag, attrs):
        self._insert_element(tag, self._clean_attrs(attrs), self_closing=True)

    def _insert_element(self, tag, attrs, self_closing):
        if tag == "html":
            if self.html is None:
                self._ensure_html()
                self.html.attrs.update(attrs)
            else:
                self._merge_attrs(self.html, attrs)
            return
        if tag == "head":
            if self.head_el is None and not self.head_closed:
                head = self._open_head()
                head.attrs.update(attrs)
                self.stack = [self.html, head]
            elif self.head_el is not None:
                self._merge_attrs(self.head_el, attrs)
            return
        if tag == "body":
            created = self.body_el is None
            body = self._open_body()
            if created:
                body.attrs.update(attrs)
            else:
                self._merge_attrs(body, attrs)
            self.stack = [self.html, body]
            return

        target = self._insertion_target(tag)
        if tag in P_CLOSERS:
            self._close_p_in_scope()
            target = self._current() or target
        self._close_siblings(tag)
        target = self._current() or target

        el = Element(tag, attrs)
        target.append(el)
        if tag not in VOID_ELEMENTS and not self_closing:
            self.stack.append(el)

    def handle_endtag(self, tag):
        if tag == "html":
            self.stack = [self.html] if self.html else []
            self.head_closed = True
            return
        if tag == "head":
            if self.head_el is not None and self.head_el in self.stack:
                self._pop_to(self.head_el)
            self.head_closed = True
            return
        if tag == "body":
            if self.body_el is not None and self.body_el in self.stack:
                self._pop_to(self.body_el)
            return
        for el in reversed(self.stack):
            if el.tag == tag:
                self._pop_to(el)
                return
            if el.tag in ("html", "body", "head"):
                return
        # Unmatched end tag: ignore.

    def handle_data(self, data):
        top = self._current()
        if top is None or top is self.head_el:
            if not data.strip():
                if top is not None:
                    top.append_text(data)
                return
            if top is None:
                body = self._open_body()
                self.stack.append(body)
                body.append_text(data)
                return
            # Non-whitespace text in head: reopen into body.
            self.stack = [self.html]
            body = self._open_body()
            self.stack.append(body)
            body.append_text(data)
            return
        top.append_text(data)

    def handle_comment(self, data):
        top = self._current()
        if top is None:
            self._ensure_html()
            target = self.head_el if (self.head_el and not self.head_closed) else self._open_body()
            target.append(Comment(data))
        else:
            top.append(Comment(data))

    def handle_decl(self, decl):
        if self.doctype is None and decl.lower().startswith("doctype"):
            self.doctype = decl

    def unknown_decl(self, data):
        pass

    def handle_pi(self, data):
        pass

    def finish(self) -> tuple[Element, str | None]:
        self._ensure_html()
        self._open_head()
        self._open_body()
        return self.html, self.doctype


def parse_html(source: str | bytes, page_url: str) -> HtmlPage:
    """Parse HTML text into a page; never fails on malformed markup.

    Bytes are decoded as UTF-8 with replacement. Raises ValueError only when
    page_url is not an absolute URL.
    """
    if isinstance(source, bytes):
        source = source.decode("utf-8", errors="replace")
    builder = _TreeBuilder()
    builder.feed(source)
    builder.close()
    root, doctype = builder.finish()
    return HtmlPage(root, page_url, doctype)


def _serialize_node(node: Node, out: list[str], raw: bool):
    if isinstance(node, Text):
        out.append(node.data if raw else escape(node.data, quote=False))
        return
    if isinstance(node, Comment):
        out.append(f"<!--{node.data}-->")
        return
    el: Element = node
    out.append(f"<{el.tag}")
    for name, value in el.attrs.items():
        if value is None:
            out.append(f" {name}")
        else:
            out.append(f' {name}="{escape(value, quote=True)}"')
    out.append(">")
    if el.tag in VOID_ELEMENTS:
        return
    child_raw = el.tag in RAW_TEXT_ELEMENTS
    for child in el.children:
        _serialize_node(child, out, child_raw)
    out.append(f"</{el.tag}>")


def serialize(page: HtmlPage) -> str:
    """Render the page back to HTML text (UTF-8 clean, entities re-escaped)."""
    out: list[str] = []
    if page.doctype:
        out.append(f"<!{page.doctype}>\n")
    _serialize_node(page.root, out, raw=False)
    return "".join(out)


def classify_link(href: str | None, page: HtmlPage) -> LinkClass:
    """Classify an href/src value relative to the page's host.

    Total and deterministic: empty values are EMPTY, known do-nothing
    fragment/javascript patterns are USELESS_INTERNAL, absolute URLs whose
    registrable host differs from the page's are EXTERNAL, and everything
    else (relative paths, fragments, same-host URLs, data:/mailto: and
    unparseable values) is INTERNAL.
    """
    if href is None:
        return LinkClass.EMPTY
    trimmed = href.strip()
    if trimmed == "":
        return LinkClass.EMPTY
    if trimmed.lower() in USELESS_LINK_PATTERNS:
        return LinkClass.USELESS_INTERNAL
    try:
        split = urlsplit(trimmed)
    except ValueError:
        return LinkClass.INTERNAL
    if split.scheme in ("javascript", "data", "mailto", "tel"):
        return LinkClass.INTERNAL
    host = registrable_host(trimmed)
    if not host:
        return LinkClass.INTERNAL
    return LinkClass.EXTERNAL if host != page.domain else LinkClass.INTERNAL


def structurally_equal(a: Node, b: Node) -> bool:
    """Tree equality over tags, attributes, text, and comments."""
    if type(a) is not type(b):
        return False
    if isinstance(a, Text):
        return a.data == b.data
    if isinstance(a, Comment):
        return a.data == b.data
    if a.tag != b.tag or a.attrs != b.attrs:
        return False
    if len(a.children) != len(b.children):
        return False
    return all(structurally_equal(x, y) for x, y in zip(a.children, b.children))


def pages_equal(a: HtmlPage, b: HtmlPage) -> bool:
    return a.doctype == b.doctype and structurally_equal(a.root, b.root)


def page_fingerprint(page: HtmlPage) -> str:
    """Stable content hash of the serialized page."""
    return hashlib.sha256(serialize(page).encode("utf-8")).hexdigest()
