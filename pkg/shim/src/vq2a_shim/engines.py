"""QG/QA engines served over the wire protocol.

An engine exposes three methods:

    generate(caption, answer, n) -> list of {"text", "score"} dicts
    answer(question, context)    -> (answer, score), "" = abstain
    info()                       -> model identifiers for /v1/health
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable

DEFAULT_QG_MODEL = "valhalla/t5-small-qg-prepend"
DEFAULT_QA_MODEL = "deepset/roberta-base-squad2"


class ModelLoadError(RuntimeError):
    """A model checkpoint cannot be loaded; the service must refuse to start."""


class RecordedEngine:
    """Replays recorded model exchanges from a JSONL fixture.

    Unrecorded inputs get a deterministic low-scoring template (generate) or an
    abstention (answer) so the service stays total and protocol-valid.
    """

    def __init__(self, recordings: Iterable[dict] = ()):
        self._generate: dict[tuple[str, str], list[dict]] = {}
        self._answer: dict[tuple[str, str], tuple[str, float]] = {}
        for row in recordings:
            if row.get("type") == "generate":
                self._generate[(row["caption"], row["answer"])] = [
                    {"text": str(q["text"]), "score": float(q["score"])}
                    for q in row["questions"]
                ]
            elif row.get("type") == "answer":
                self._answer[(row["question"], row["context"])] = (
                    str(row["answer"]),
                    float(row["score"]),
                )

    @classmethod
    def load(cls, path) -> "RecordedEngine":
        rows = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    rows.append(json.loads(line))
        return cls(rows)

    def generate(self, caption: str, answer: str, n: int) -> list[dict]:
        recorded = self._generate.get((caption, answer))
        if recorded is None:
            recorded = [{"text": f'what does "{answer}" refer to here?', "score": 0.01}]
        ranked = sorted(recorded, key=lambda q: -q["score"])
        return ranked[:n]

    def answer(self, question: str, context: str) -> tuple[str, float]:
        return self._answer.get((question, context), ("", 0.0))

    def info(self) -> dict:
        return {"qg_model": "recorded", "qa_model": "recorded"}


class TransformersEngine:
    """Wraps a text2text question-generation checkpoint and an extractive QA
    checkpoint. Any publicly available pair with these roles will do; the
    pipeline only depends on protocol conformance, not on specific weights.
    """

    def __init__(
        self,
        qg_model: str = DEFAULT_QG_MODEL,
        qa_model: str = DEFAULT_QA_MODEL,
        device: str = "cpu",
        max_sequence_length: int = 512,
        max_question_tokens: int = 64,
    ):
        try:
            import torch
            from transformers import AutoModelForSeq2SeqLM, AutoTokenizer, pipeline
        except ImportError as exc:
            raise ModelLoadError(f"transformers/torch not installed: {exc}")
        self._torch = torch
        self.qg_model_id = qg_model
        self.qa_model_id = qa_model
        self.device = device
        self.max_sequence_length = max_sequence_length
        self.max_question_tokens = max_question_tokens
        try:
            self._qg_tokenizer = AutoTokenizer.from_pretrained(qg_model)
            self._qg = AutoModelForSeq2SeqLM.from_pretrained(qg_model).to(device).eval()
            self._qa = pipeline(
                "question-answering",
                model=qa_model,
                device=-1 if device == "cpu" else device,
            )
        except Exception as exc:  # refuse to start on any load failure
            raise ModelLoadError(f"cannot load checkpoints: {exc}")

    def generate(self, caption: str, answer: str, n: int) -> list[dict]:
        prompt = f"answer: {answer}  context: {caption}"
        inputs = self._qg_tokenizer(
            prompt, return_tensors="pt", truncation=True, max_length=self.max_sequence_length
        ).to(self.device)
        with self._torch.no_grad():
            out = self._qg.generate(
                **inputs,
                num_beams=max(4, n),
                num_return_sequences=n,
                max_new_tokens=self.max_question_tokens,
                output_scores=True,
                return_dict_in_generate=True,
                early_stopping=True,
            )
        texts = self._qg_tokenizer.batch_decode(out.sequences, skip_special_tokens=True)
        scores = (
            out.sequences_scores.tolist()
            if getattr(out, "sequences_scores", None) is not None
            else [1.0 / (rank + 1) for rank in range(len(texts))]
        )
        questions = [
            {"text": text.strip(), "score": float(score)}
            for text, score in zip(texts, scores)
            if text.strip()
        ]
        questions.sort(key=lambda q: -q["score"])
        return questions[:n]

    def answer(self, question: str, context: str) -> tuple[str, float]:
        result = self._qa(
            question=question,
            context=context,
            handle_impossible_answer=True,
            max_seq_len=self.max_sequence_length,
        )
        return str(result.get("answer") or ""), float(result.get("score", 0.0))

    def info(self) -> dict:
        return {"qg_model": self.qg_model_id, "qa_model": self.qa_model_id}
