from __future__ import annotations

import random

import pytest

TAGS = ["div", "span", "p", "section", "h1", "ul", "li", "a", "em",
        "zjs-component", "article", "b"]
VOID_TAGS = ["br", "img", "hr", "input", "meta"]
ATTR_NAMES = ["id", "class", "title", "data-x", "href", "remote-src",
              "display", "name", "greeting", "value"]

_TEXT_ALPHABET = (
    "abc XYZ 012 &amp; &lt; &#65; < > ; ! ? é中\U0001f600 '\" \n\t"
)
_ATTR_ALPHABET = "abc 012 &amp; < > ' \" é ;=:-/"
_SCRIPT_ALPHABET = "abc(){};<>\"'`=!&|,\n / * $ é"


def _random_run(rng: random.Random, alphabet: str, lo: int, hi: int) -> str:
    return "".join(rng.choice(alphabet) for _ in range(rng.randint(lo, hi)))


def random_script_body(rng: random.Random) -> str:
    body = _random_run(rng, _SCRIPT_ALPHABET, 0, 60)
    # the body must not close its own element early
    return body.replace("</script", "<\\/script").replace("</SCRIPT", "<\\/SCRIPT")


def random_fragment(rng: random.Random, max_depth: int = 8) -> str:
    parts: list[str] = []
    _emit_nodes(rng, parts, depth=0, max_depth=max_depth, budget=[rng.randint(1, 14)])
    return "".join(parts)


def _random_attrs(rng: random.Random) -> str:
    out = []
    for _ in range(rng.randint(0, 3)):
        name = rng.choice(ATTR_NAMES)
        kind = rng.random()
        if kind < 0.2:
            out.append(f" {name}")
        elif kind < 0.4:
            value = _random_run(rng, "abc012-", 1, 6)
            out.append(f" {name}={value}")
        else:
            value = _random_run(rng, _ATTR_ALPHABET, 0, 10).replace('"', "&quot;")
            out.append(f' {name}="{value}"')
    return "".join(out)


def _emit_nodes(rng, parts, depth, max_depth, budget) -> None:
    while budget[0] > 0:
        budget[0] -= 1
        roll = rng.random()
        if roll < 0.35:
            parts.append(_random_run(rng, _TEXT_ALPHABET, 1, 20))
        elif roll < 0.45:
            parts.append(f"<!--{_random_run(rng, 'abc <>& -', 0, 12).replace('-->', '- >')}-->")
        elif roll < 0.55:
            parts.append(f"<{rng.choice(VOID_TAGS)}{_random_attrs(rng)}>")
        elif roll < 0.65:
            parts.append(f"<script>{random_script_body(rng)}</script>")
        else:
            tag = rng.choice(TAGS)
            parts.append(f"<{tag}{_random_attrs(rng)}>")
            if depth < max_depth:
                inner = [rng.randint(0, 4)]
                _emit_nodes(rng, parts, depth + 1, max_depth, inner)
            if rng.random() < 0.9:
                parts.append(f"</{tag}>")
        if rng.random() < 0.05:
            # stray markup the parser must recover from
            parts.append(rng.choice(["</div>", "<", "</>", "<!", "<?pi x>"]))


def fragment_corpus(seed: int, count: int, max_depth: int = 8) -> list[str]:
    rng = random.Random(seed)
    return [random_fragment(rng, max_depth) for _ in range(count)]


@pytest.fixture
def rng() -> random.Random:
    return random.Random(0xC0FFEE)


@pytest.fixture
def site(tmp_path):
    """Write fragment files into a tmp dir; returns (root, writer)."""
    def write(rel: str, text: str) -> str:
        path = tmp_path / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
        return str(path)

    return tmp_path, write
