import json

import structlog
from json_repair import repair_json

logger = structlog.get_logger()


def load_lenient_json(text: str) -> dict:
    """Parse a hand-edited JSON document, repairing trailing commas, comments and the like."""
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        logger.warning("spec file is not strict JSON, repairing", error=str(e))
    return repair_json(text, ensure_ascii=False, return_objects=True)
