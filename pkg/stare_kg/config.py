# stare_kg/config.py

import os
import logging
from pathlib import Path

from dotenv import load_dotenv

load_dotenv()

BASE_DIR = Path(__file__).resolve().parent

# 결과물 루트. 환경변수로 덮어쓸 수 있음
OUTPUT_DIR = os.getenv("STARE_OUTPUT_DIR", os.path.join(os.getcwd(), "runs"))

# 번들 토이 설정 (gradcheck 기본값)
TOY_CONFIG_PATH = str(BASE_DIR / "configs" / "toy.conf")

# serve 가 읽을 체크포인트 디렉토리
CHECKPOINT_PATH = os.getenv("STARE_CHECKPOINT_PATH", os.path.join(OUTPUT_DIR, "checkpoints", "final"))

DEVICE = os.getenv("STARE_DEVICE", "cpu")

# ---------------- Logging ----------------
LOG_LEVEL = os.getenv("STARE_LOG_LEVEL", "INFO").upper()
LOG_FORMAT = "%(asctime)s | %(levelname)-8s | %(name)s | %(message)s"
LOG_DATEFMT = "%Y-%m-%d %H:%M:%S"


def setup_logging(level: str = LOG_LEVEL):
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format=LOG_FORMAT,
        datefmt=LOG_DATEFMT,
    )


# ---------------- Statement files ----------------
SPLIT_FILES = {"train": "train.txt", "valid": "valid.txt", "test": "test.txt"}
FIELD_SEPARATOR = ","

# Wikidata 스타일 라벨이 아니면 리터럴로 본다 (숫자, 날짜, 따옴표 문자열)
DEFAULT_LITERAL_PATTERN = r'^(?:[+-]?\d[\d.,:eE+-]*|\d{4}-\d{2}-\d{2}.*|".*"|\'.*\')$'

# 디코더 쿼리 최대 길이 (WD50K/JF17K 15, WikiPeople 7)
MAX_QUERY_LENGTH = 15
WIKIPEOPLE_MAX_QUERY_LENGTH = 7
