"""Regenerate ``tests/fixtures/golden_sentiment.jsonl`` from the reference scorer.

This is the independent oracle for the sentiment engine. It needs ``nltk``
(not a package dependency) and the UPSTREAM lexicon installed as the NLTK
``vader_lexicon`` resource::

    pip install nltk
    mkdir -p ~/nltk_data/sentiment/vader_lexicon
    cp vader_lexicon.txt ~/nltk_data/sentiment/vader_lexicon/
    (cd ~/nltk_data/sentiment && python -m zipfile -c vader_lexicon.zip vader_lexicon)
    python scripts/make_golden.py
"""

from __future__ import annotations

import json
from pathlib import Path

from nltk.sentiment.vader import SentimentIntensityAnalyzer

FIXTURES = Path(__file__).resolve().parents[1] / "tests" / "fixtures"


def main() -> None:
    sia = SentimentIntensityAnalyzer()
    sentences = (FIXTURES / "golden_sentences.txt").read_text(encoding="utf-8").splitlines()
    with open(FIXTURES / "golden_sentiment.jsonl", "w", encoding="utf-8") as fh:
        for text in sentences:
            if text.strip():
                fh.write(json.dumps({"text": text, **sia.polarity_scores(text)}) + "\n")


if __name__ == "__main__":
    main()
