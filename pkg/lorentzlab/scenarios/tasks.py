from celery import shared_task
from celery.utils.log import get_task_logger

from core.exceptions import LabError
from core.export import clean

from .kinds import TaskKind

logger = get_task_logger(__name__)

OK = 'ok'
ERROR = 'error'


@shared_task
def run_task(preset: dict, kind: str, params: dict, output_dir: str, stem: str) -> dict:
    """ Run one validated scenario task, errors are embedded in the outcome """

    handler = TaskKind.get_proxy(kind)(preset, params, output_dir, stem)
    logger.info(f'Task {stem} on {preset["name"]} started')

    try:
        result = handler.run()

    except LabError as exc:
        logger.warning(f'Task {stem} failed: {exc}')
        return {'status': ERROR, 'error': exc.as_dict(), 'files': handler.files}

    except Exception as exc:
        logger.exception(f'Task {stem} crashed')
        return {'status': ERROR, 'error': {'code': 'internal-error', 'message': str(exc)}, 'files': handler.files}

    return {'status': OK, 'result': clean(result), 'files': handler.files}
