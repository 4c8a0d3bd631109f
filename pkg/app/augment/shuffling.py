"""
Sub-dialogue shuffling: every training dialogue is replaced by a fixed
number of contiguous utterance spans that inherit its label, with the
per-class multiplicities chosen so both classes contribute about the same
number of spans.
"""
import math
from fractions import Fraction
import numpy as np
from corpus.manifest import check_feature_rows, class_counts
from schemas.augment import AugmentParams, AugmentationPlan, BalanceMode, SubDialogueRef
from schemas.corpus import ClassCounts, Corpus, Split
from utils.exceptions import AugmentError
from utils.logger import get_logger

logger = get_logger(__name__)

# eps * t this close below an integer reaches it
LENGTH_TOLERANCE = 1e-9


def make_rng(seed: int) -> np.random.Generator:
    """PCG64 stream; every sampled span consumes exactly two `random()` doubles."""
    return np.random.Generator(np.random.PCG64(seed))


def negative_multiplier(counts: ClassCounts, m_plus: int, mode: BalanceMode = BalanceMode.corrected) -> int:
    """
    Number of spans drawn from each negative dialogue.

    `corrected` solves N+ * M+ = N- * M- for M-; `literal` evaluates
    N- * M+ / N+. Both round to nearest with ties to even and never
    return less than 1.
    """
    if counts.n_pos < 1 or counts.n_neg < 1:
        raise AugmentError(
            f"both classes need training dialogues, got n_pos={counts.n_pos}, n_neg={counts.n_neg}",
            details=counts.model_dump(),
        )
    if m_plus < 1:
        raise AugmentError(f"m_plus must be at least 1, got {m_plus}")

    if BalanceMode(mode) == BalanceMode.corrected:
        exact = Fraction(counts.n_pos * m_plus, counts.n_neg)
    else:
        exact = Fraction(counts.n_neg * m_plus, counts.n_pos)
    return max(1, round(exact))


def sample_subdialogue(t: int, params: AugmentParams, rng: np.random.Generator) -> tuple[int, int]:
    """
    Draw one span (s, e), both inclusive, from a dialogue of `t` rows.

    eps is uniform on [eps_low, eps_high), the span length is
    max(1, floor(eps * t)) (with LENGTH_TOLERANCE slack, never above
    max(1, floor(eps_high * t))) and s is uniform over the admissible starts.
    """
    if t < 1:
        raise AugmentError(f"cannot sample from a dialogue of length {t}")

    eps = params.eps_low + (params.eps_high - params.eps_low) * rng.random()
    if eps >= params.eps_high:
        eps = math.nextafter(params.eps_high, 0.0)
    longest = min(t, max(1, math.floor(params.eps_high * t)))
    length = min(longest, max(1, math.floor(eps * t + LENGTH_TOLERANCE)))

    n_starts = t - length + 1
    s = min(int(rng.random() * n_starts), n_starts - 1)
    return s, s + length - 1


def build_plan(corpus: Corpus, params: AugmentParams, include_interviewer: bool = False) -> AugmentationPlan:
    """
    Materialize the augmentation plan of the train split.

    Dialogues are visited in manifest order; each contributes M+ (positive)
    or M- (negative) spans drawn with `sample_subdialogue` from one
    generator seeded with `params.seed`. Spans index feature rows, so they
    count participant utterances unless `include_interviewer` is set.
    """
    dialogues = corpus.split(Split.train)
    counts = class_counts(corpus, Split.train)
    check_feature_rows(dialogues, include_interviewer)

    if params.balance:
        if counts.n_pos == 0 or counts.n_neg == 0:
            raise AugmentError(
                f"the train split has only one class (n_pos={counts.n_pos}, n_neg={counts.n_neg}); "
                "disable balancing (balance=false / --no-balance) to augment it",
                details=counts.model_dump(),
            )
        m_minus = negative_multiplier(counts, params.m_plus, params.balance_mode)
    else:
        m_minus = params.m_plus

    rng = make_rng(params.seed)
    entries = []
    for dialogue in dialogues:
        t = dialogue.n_rows(include_interviewer)
        multiplicity = params.m_plus if dialogue.label == 1 else m_minus
        for _ in range(multiplicity):
            s, e = sample_subdialogue(t, params, rng)
            entries.append(SubDialogueRef(session_id=dialogue.session_id, s=s, e=e, label=dialogue.label))

    plan = AugmentationPlan(params=params, m_minus=m_minus, include_interviewer=include_interviewer, entries=entries)
    label_counts = plan.label_counts()
    logger.info(
        "Built plan: M+=%d, M-=%d, %d positive and %d negative sub-dialogues",
        params.m_plus,
        m_minus,
        label_counts[1],
        label_counts[0],
    )
    return plan


def check_plan_corpus(plan: AugmentationPlan, corpus: Corpus, include_interviewer: bool = False) -> None:
    """A plan read from disk must index train sessions of `corpus`, with their labels and row counts."""
    if plan.include_interviewer != include_interviewer:
        raise AugmentError(
            f"plan was built with include_interviewer={plan.include_interviewer}, "
            f"the experiment uses include_interviewer={include_interviewer}"
        )
    train = {d.session_id: d for d in corpus.split(Split.train)}
    for i, entry in enumerate(plan.entries):
        dialogue = train.get(entry.session_id)
        if dialogue is None:
            raise AugmentError(f"plan entry {i} names session '{entry.session_id}', which is not a train session")
        if entry.label != dialogue.label:
            raise AugmentError(f"plan entry {i} labels session '{entry.session_id}' {entry.label}, manifest says {dialogue.label}")
        rows = dialogue.n_rows(include_interviewer)
        if entry.e >= rows:
            raise AugmentError(
                f"plan entry {i} ends at row {entry.e} but session '{entry.session_id}' has {rows} rows",
                details={"session_id": entry.session_id, "s": entry.s, "e": entry.e, "rows": rows},
            )
