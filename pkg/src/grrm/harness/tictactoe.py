"""Tic-tac-toe endgame corpus and board feature windows.

Boards are 9-tuples over {x, o, b} in row-major cell order.  The corpus
holds every board reachable when x moves first and play stops at a win or a
full board; the label says whether x has won.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from ..spaces import FiniteSpace, make_space, product_space

SYMBOLS = ("x", "o", "b")
LABELS = ("negative", "positive")

# Cell windows by row-major index.
FULL_BOARD = (0, 1, 2, 3, 4, 5, 6, 7, 8)
UPPER_LEFT_2X2 = (0, 1, 3, 4)
MIDDLE_COLUMN = (1, 4, 7)
ALL_BUT_TWO_CORNERS = (0, 1, 3, 4, 5, 7, 8)

_LINES = (
    (0, 1, 2), (3, 4, 5), (6, 7, 8),
    (0, 3, 6), (1, 4, 7), (2, 5, 8),
    (0, 4, 8), (2, 4, 6),
)


def _winner(board: tuple) -> str | None:
    for a, b, c in _LINES:
        if board[a] != "b" and board[a] == board[b] == board[c]:
            return board[a]
    return None


@lru_cache(maxsize=1)
def endgame_corpus() -> tuple:
    """All terminal boards with their win-for-x labels, in sorted order."""
    boards = set()

    def play(board: tuple, player: str) -> None:
        winner = _winner(board)
        if winner is not None or "b" not in board:
            boards.add(board)
            return
        for i in range(9):
            if board[i] == "b":
                play(board[:i] + (player,) + board[i + 1 :], "o" if player == "x" else "x")

    play(("b",) * 9, "x")
    labeled = tuple(
        (board, "positive" if _winner(board) == "x" else "negative")
        for board in sorted(boards)
    )
    return labeled


def cell_space() -> FiniteSpace:
    return make_space(SYMBOLS)


def label_space() -> FiniteSpace:
    return make_space(LABELS)


def window_space(window: tuple) -> FiniteSpace:
    """Product of one cell alphabet per window position."""
    return product_space(*(cell_space() for _ in window))


def board_feature(board: tuple, window: tuple) -> tuple:
    return tuple(board[i] for i in window)


def window_projection(source_window: tuple, target_window: tuple):
    """Map a source-window tuple onto a target window it covers."""
    positions = []
    for cell in target_window:
        if cell not in source_window:
            raise ValueError(f"cell {cell} is not in the source window")
        positions.append(source_window.index(cell))

    def project(feature: tuple) -> tuple:
        return tuple(feature[i] for i in positions)

    return project


def tictactoe_generate(seed, n: int, window: tuple = FULL_BOARD) -> list:
    """Draw n labeled boards i.i.d. uniformly from the endgame corpus."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    corpus = endgame_corpus()
    idx = rng.integers(0, len(corpus), size=n)
    return [
        (board_feature(corpus[i][0], window), corpus[i][1]) for i in idx
    ]


def corpus_split(seed, train_size: int, window: tuple = FULL_BOARD) -> tuple[list, list]:
    """Shuffle the corpus and split it into train and test halves."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    corpus = endgame_corpus()
    if not 0 < train_size < len(corpus):
        raise ValueError(f"train size must be in (0, {len(corpus)})")
    order = rng.permutation(len(corpus))
    rows = [
        (board_feature(corpus[i][0], window), corpus[i][1]) for i in order
    ]
    return rows[:train_size], rows[train_size:]


def inject_noise(
    samples,
    rho_minus: float = 0.0,
    rho_plus: float = 0.0,
    cell_rate: float = 0.0,
    seed=0,
    symbols: tuple = SYMBOLS,
    labels: tuple = LABELS,
) -> list:
    """Flip labels asymmetrically and corrupt feature cells uniformly.

    Label flips and per-cell symbol flips are independent.  A flipped cell
    moves to one of the other symbols chosen uniformly, matching the
    symbol-corruption kernel used by the schemes.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    samples = list(samples)
    if not samples:
        return []
    width = len(samples[0][0])
    n = len(samples)
    flip_draw = rng.random(n)
    cell_mask = rng.random((n, width)) < cell_rate
    replacement = rng.integers(0, len(symbols) - 1, size=(n, width))
    out = []
    for i, (feature, label) in enumerate(samples):
        rate = rho_minus if label == labels[0] else rho_plus
        if flip_draw[i] < rate:
            label = labels[1] if label == labels[0] else labels[0]
        if cell_mask[i].any():
            cells = list(feature)
            for j in range(width):
                if cell_mask[i, j]:
                    others = [s for s in symbols if s != cells[j]]
                    cells[j] = others[replacement[i, j]]
            feature = tuple(cells)
        out.append((feature, label))
    return out
