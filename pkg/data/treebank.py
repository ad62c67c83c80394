"""Rewrite bracketed constituency parses into the paired-parenthesis WSJ output style."""
import re

from errors import DataError

_TOKEN = re.compile(r"\(|\)|[^\s()]+")
EMPTY_ELEMENT = "-NONE-"


def _parse(text):
    """Nested [label, children] lists; terminals are plain strings."""
    root = [None, []]
    stack = [root]
    expect_label = False
    for tok in _TOKEN.findall(text):
        if tok == "(":
            node = [None, []]
            stack[-1][1].append(node)
            stack.append(node)
            expect_label = True
        elif tok == ")":
            if len(stack) == 1:
                raise DataError(f"unbalanced parse (extra ')'): {text!r}")
            stack.pop()
            expect_label = False
        elif expect_label:
            stack[-1][0] = tok
            expect_label = False
        else:
            stack[-1][1].append(tok)
    if len(stack) != 1:
        raise DataError(f"unbalanced parse ({len(stack) - 1} unclosed '('): {text!r}")
    trees = root[1]
    if len(trees) != 1 or isinstance(trees[0], str):
        raise DataError(f"expected exactly one bracketed tree: {text!r}")
    return trees[0]


def _prune(node):
    label, children = node
    if label == EMPTY_ELEMENT:
        return None
    kept = []
    for child in children:
        if isinstance(child, str):
            kept.append(child)
        else:
            pruned = _prune(child)
            if pruned is not None:
                kept.append(pruned)
    return [label, kept] if kept else None


def _render(node, out):
    label, children = node
    if label is None:
        raise DataError("unlabeled constituent inside the tree")
    out.append("(" + label.lower())
    if len(children) == 1 and isinstance(children[0], str):
        out.append(children[0].lower() + ")")
        return
    for child in children:
        if isinstance(child, str):
            out.append(child.lower())
        else:
            _render(child, out)
    out.append(")")


def wsj_paren_transform(linearized_parse: str) -> str:
    """
    "(S (NP-SBJ (PRP he)) ...)" -> "(s (np-sbj (prp he) ) ...".

    Each "(label" becomes one token, a terminal absorbs the ")" of its
    preterminal, every other ")" stands alone. Empty elements are dropped and
    an unlabeled outer bracket is unwrapped. Already-rewritten input is
    returned unchanged.
    """
    tree = _prune(_parse(linearized_parse))
    if tree is None:
        raise DataError(f"parse has no content: {linearized_parse!r}")
    while tree[0] is None and len(tree[1]) == 1 and not isinstance(tree[1][0], str):
        tree = tree[1][0]
    out = []
    _render(tree, out)
    return " ".join(out)
