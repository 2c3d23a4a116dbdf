"""Builds the extension module and exercises it end to end.

    python3 python/smoke_test.py [--no-build]
"""

import os
import shutil
import subprocess
import sys
import tempfile

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))

PAPER = r"""
\documentclass{article}
\begin{document}
\begin{definition}[Spread]\label{def:spread}
Let $G$ be a graph. The \emph{spread} of $G$ is the difference between the
largest and smallest eigenvalue, i.e. a measure of its \emph{components}.
\end{definition}
\begin{definition}
A graph is \emph{non-$k$-equivalent} if no two vertices agree.
\end{definition}
\end{document}
"""


def load_module(build):
    if build:
        subprocess.run(
            ["cargo", "build", "--release", "-p", "defitex-py"], cwd=ROOT, check=True
        )
    lib = os.path.join(ROOT, "target", "release", "libdefitex_py.so")
    if not os.path.exists(lib):
        sys.exit(f"missing {lib}; run without --no-build")
    tmp = tempfile.mkdtemp()
    shutil.copy(lib, os.path.join(tmp, "defitex.so"))
    sys.path.insert(0, tmp)
    import defitex

    return defitex


def main():
    dx = load_module("--no-build" not in sys.argv)

    rendered = dx.Renderer().render(r"the \emph{spread} of $G$")
    assert rendered.text == "the spread of G", rendered.text
    assert rendered.map_span(4, 16) == (4, 10)

    assert dx.filter_noise("i.e.") == "abbreviation"
    assert dx.filter_noise("spread") is None

    tokens = dx.tokenize_text("a non-k-equivalent graph.")
    assert [t[0] for t in tokens] == ["a", "non-k-equivalent", "graph", "."]
    assert dx.label_iob2("a graph coloring here", [(2, 16)]) == [
        "O",
        "B-MATH_TERM",
        "I-MATH_TERM",
        "O",
    ]
    assert dx.is_valid_iob2(["O", "B-MATH_TERM", "I-MATH_TERM"])
    assert not dx.is_valid_iob2(["O", "I-MATH_TERM"])

    defs = dx.extract_definitions(PAPER, paper_id="1303.0417", last_updated="2013-03-02")
    assert len(defs) == 2
    assert defs[0].spans == [(22, 28, "spread"), (119, 129, "components")]
    examples = dx.build_examples(defs)
    assert examples[0].id == "1303.0417#0"
    assert examples[0].terms == ["spread", "components"]
    assert examples[1].terms == ["non-k-equivalent"]
    assert len(examples[0].tokens) == len(examples[0].tags)

    preds = {ex.id: [t.lower() for t in ex.terms] for ex in examples}
    report = dx.evaluate(examples, preds)
    assert (report.precision, report.recall, report.f1) == (1.0, 1.0, 1.0), report
    assert '"f1": 1.0000' in report.to_json()

    split = dx.score_terms(["graph coloring"], ["graph", "coloring", "noise"])
    assert split.tp == 0 and split.tp_split == 1 and split.cut_off == 1
    p, r, f1 = dx.compute_metrics(1, 3, 1)
    assert abs(p - 1 / 3) < 1e-12 and r == 1.0 and abs(f1 - 0.5) < 1e-12

    try:
        dx.evaluate(examples, {"nope#0": []})
    except ValueError as e:
        assert "nope#0" in str(e)
    else:
        raise AssertionError("unknown id accepted")

    folds = dx.kfold([str(i) for i in range(10)], 3)
    assert sorted(sum(folds, [])) == sorted(str(i) for i in range(10))
    assert folds == dx.kfold([str(i) for i in range(10)], 3, seed=42)

    print("smoke test ok:", report)


if __name__ == "__main__":
    main()
