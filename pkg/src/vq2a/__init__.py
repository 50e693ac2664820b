"""Turn annotated image captions into VQA datasets.

Pipeline: extract candidate answers from parsed captions, generate a question
per candidate through a pluggable backend, keep only pairs that survive
round-trip QA validation, then assemble train/dev datasets and evaluate
predictions against them.
"""

from .assemble import (
    AnswerVocabulary,
    DatasetRecord,
    QATriplet,
    assign_splits,
    build_answer_target,
    group_dev_targets,
    inject_zero_count,
    restrict_to_vocabulary,
)
from .corpus import AnnotatedCaption, Span, Token, detokenize, load_corpus, write_corpus
from .extract import (
    CandidateAnswer,
    extract_candidates,
    extract_noun_phrases,
    extract_parse_tree_spans,
    extract_pos_spans,
)
from .filtering import MatchDecision, normalize, token_f1, validate_pair
from .genqa import (
    BackendConfig,
    HttpBackend,
    QARequest,
    QAResponse,
    QGRequest,
    QGResponse,
    StubBackend,
    answer_question,
    create_backend,
    generate_question,
    run_batch,
)
from .metrics import corpus_stats, evaluate, question_prefix, top1_accuracy, vqa_accuracy

__version__ = "0.1.0"

__all__ = [
    "AnnotatedCaption",
    "AnswerVocabulary",
    "BackendConfig",
    "CandidateAnswer",
    "DatasetRecord",
    "HttpBackend",
    "MatchDecision",
    "QARequest",
    "QAResponse",
    "QATriplet",
    "QGRequest",
    "QGResponse",
    "Span",
    "StubBackend",
    "Token",
    "answer_question",
    "assign_splits",
    "build_answer_target",
    "corpus_stats",
    "create_backend",
    "detokenize",
    "evaluate",
    "extract_candidates",
    "extract_noun_phrases",
    "extract_parse_tree_spans",
    "extract_pos_spans",
    "generate_question",
    "group_dev_targets",
    "inject_zero_count",
    "load_corpus",
    "normalize",
    "question_prefix",
    "restrict_to_vocabulary",
    "run_batch",
    "token_f1",
    "top1_accuracy",
    "validate_pair",
    "vqa_accuracy",
    "write_corpus",
]
