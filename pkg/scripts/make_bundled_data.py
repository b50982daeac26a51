"""Regenerate the CSVs bundled under src/rulemill/data/.

iris and breast come from scikit-learn (dev-time dependency only);
tic-tac-toe is enumerated exactly: every reachable final board of a game
where x moves first, labeled positive iff x has three in a row.
"""

from __future__ import annotations

from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "src" / "rulemill" / "data"

LINES = [
    (0, 1, 2), (3, 4, 5), (6, 7, 8),
    (0, 3, 6), (1, 4, 7), (2, 5, 8),
    (0, 4, 8), (2, 4, 6),
]


def winner(board):
    for a, b, c in LINES:
        if board[a] != "b" and board[a] == board[b] == board[c]:
            return board[a]
    return None


def _play(board, player, finals):
    w = winner(board)
    if w is not None or "b" not in board:
        finals.add((tuple(board), "positive" if w == "x" else "negative"))
        return
    nxt = "o" if player == "x" else "x"
    for i in range(9):
        if board[i] == "b":
            board[i] = player
            _play(board, nxt, finals)
            board[i] = "b"


def make_tictactoe():
    finals: set = set()
    _play(["b"] * 9, "x", finals)
    boards = sorted(finals)
    pos = sum(1 for _, label in boards if label == "positive")
    assert len(boards) == 958, len(boards)
    assert pos == 626, pos
    cells = ["tl", "tm", "tr", "ml", "mm", "mr", "bl", "bm", "br"]
    with open(OUT / "tictactoe.csv", "w", encoding="utf-8") as fh:
        fh.write(",".join(cells + ["outcome"]) + "\n")
        for board, label in boards:
            fh.write(",".join(board) + f",{label}\n")
    print(f"tictactoe.csv: {len(boards)} rows, {pos} positive")


def make_iris():
    from sklearn.datasets import load_iris

    data = load_iris()
    names = ["sepal_length", "sepal_width", "petal_length", "petal_width"]
    with open(OUT / "iris.csv", "w", encoding="utf-8") as fh:
        fh.write(",".join(names + ["species"]) + "\n")
        for row, t in zip(data.data, data.target):
            cells = [repr(float(v)) for v in row]
            fh.write(",".join(cells) + f",{data.target_names[t]}\n")
    print(f"iris.csv: {len(data.data)} rows")


def make_breast():
    from sklearn.datasets import load_breast_cancer

    data = load_breast_cancer()
    names = [n.replace(" ", "_") for n in data.feature_names]
    with open(OUT / "breast.csv", "w", encoding="utf-8") as fh:
        fh.write(",".join(names) + ",diagnosis\n")
        for row, t in zip(data.data, data.target):
            cells = [repr(float(v)) for v in row]
            fh.write(",".join(cells) + f",{data.target_names[t]}\n")
    print(f"breast.csv: {len(data.data)} rows")


if __name__ == "__main__":
    OUT.mkdir(parents=True, exist_ok=True)
    make_tictactoe()
    make_iris()
    make_breast()
