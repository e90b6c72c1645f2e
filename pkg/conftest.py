import os
import sys

# src/run.py 와 같은 import 경로 (logger_init, gln_tracking)
sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), "src"))

# 테스트는 루트의 test_*.py 만 수집
collect_ignore = ["examples", "src"]
