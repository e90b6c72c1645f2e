"""
gln_tracking 예외 정의
CLI 종료 코드와의 매핑은 task_manager.RunStatusCode 참고
"""


class GlnTrackingError(Exception):
    """패키지 공통 베이스 예외"""


class DomainError(GlnTrackingError, ValueError):
    """수학적 정의역 밖의 인자 (logit 의 u, quantile 의 p, (0,b) 밖의 lag)"""


class BoundaryError(GlnTrackingError, ValueError):
    """support 경계 (x_{j-k} == b) 에서 gradient 를 요청한 경우"""


class ConfigError(GlnTrackingError):
    """설정 파일 / 하이퍼파라미터 오류"""


class DataError(GlnTrackingError):
    """CSV 입력 오류. 가능하면 파일명과 줄 번호를 메시지에 포함"""

    def __init__(self, message: str, path: str = None, line: int = None):
        self.path = path
        self.line = line
        location = ""
        if path is not None:
            location = f"{path}"
            if line is not None:
                location += f":{line}"
            location += ": "
        super().__init__(f"{location}{message}")


class DivergenceError(GlnTrackingError):
    """추적 알고리즘의 수치 발산 (|theta| > 1e6 또는 non-finite loss)"""

    def __init__(self, message: str, method: str = None, t: int = None):
        self.method = method
        self.t = t
        super().__init__(message)
