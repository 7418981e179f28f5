import logging
from pathlib import Path
from typing import Dict, Iterable, List, Sequence

from ..utils.errors import FormatError, VocabularyError
from ..utils.io import read_json, write_json

logger = logging.getLogger(__name__)

PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"
PAD_ID = 0
UNK_ID = 1


def normalize_text(text: str) -> str:
    return " ".join(text.lower().split())


def split_words(text: str) -> List[str]:
    return normalize_text(text).split()


class Tokenizer:
    """Word-level vocabulary; ids 0 and 1 are reserved for padding and unknown words"""

    def __init__(self, words: Iterable[str]):
        unique = sorted({w for w in words if w not in (PAD_TOKEN, UNK_TOKEN)})
        self.words: List[str] = [PAD_TOKEN, UNK_TOKEN] + unique
        self._ids: Dict[str, int] = {w: i for i, w in enumerate(self.words)}

    @classmethod
    def build(cls, phrases: Iterable[str], labels: Iterable[str]) -> "Tokenizer":
        words = ["the"]
        for text in list(phrases) + list(labels):
            words.extend(split_words(text))
        return cls(words)

    @property
    def size(self) -> int:
        return len(self.words)

    def __len__(self) -> int:
        return len(self.words)

    def token_id(self, word: str, strict: bool = False) -> int:
        if word in self._ids:
            return self._ids[word]
        if strict:
            raise VocabularyError(f"word '{word}' not in tokenizer vocabulary")
        return UNK_ID

    def encode(self, text: str, strict: bool = False) -> List[int]:
        return [self.token_id(w, strict) for w in split_words(text)]

    def decode(self, ids: Sequence[int]) -> str:
        words = []
        for i in ids:
            i = int(i)
            if i == PAD_ID:
                continue
            if not 0 <= i < len(self.words):
                raise VocabularyError(f"token id {i} outside vocabulary of size {len(self.words)}")
            words.append(self.words[i])
        return " ".join(words)

    def save(self, path: Path) -> Path:
        return write_json(path, {"words": self.words})

    @classmethod
    def load(cls, path: Path) -> "Tokenizer":
        data = read_json(path)
        try:
            words = data["words"]
        except (KeyError, TypeError) as e:
            raise FormatError(f"malformed tokenizer file {path}: {e}") from e
        tokenizer = cls(words)
        if tokenizer.words != words:
            raise FormatError(f"tokenizer file {path} is not in canonical order")
        return tokenizer


def pad_tokens(tokens: Sequence[int], length: int) -> List[int]:
    """Pad with PAD or truncate to ``length``"""
    tokens = list(tokens)[:length]
    return tokens + [PAD_ID] * (length - len(tokens))
