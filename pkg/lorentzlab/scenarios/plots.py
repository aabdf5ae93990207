import json
from pathlib import Path

from core.exceptions import InvalidInput
from core.export import write_csv

# plot kind: (task kind, header, rows from the task result)
PLOT_KINDS = {
    'cone_section': (
        'cone_estimate',
        lambda result: [f'p{i}' for i in range(len(result['cross_section'][0]))],
        lambda result: result['cross_section'],
    ),
    'reach_slice': (
        'reach',
        lambda result: [f'p{i}' for i in range(len(result['slice'][0]))],
        lambda result: result['slice'],
    ),
    'lipschitz_hist': (
        'lipschitz',
        lambda result: ['low', 'high', 'count'],
        lambda result: ([row['low'], row['high'], row['count']] for row in result['ratio_histogram']),
    ),
    'plateau': (
        'stable_norm',
        lambda result: ['h', 'n', 'value'],
        lambda result: (
            [' '.join(str(v) for v in row['h']), n, value]
            for row in result['plateau_trace'] for n, value in enumerate(row['trace'], start=1)
        ),
    ),
}


def emit_plot_data(report_path, kind: str, out=None) -> Path:
    """
    Plain CSV with a one-line header from a task report

    :raises: InvalidInput
    """

    report_path = Path(report_path)

    if kind not in PLOT_KINDS:
        raise InvalidInput(f'Unknown plot kind: {kind}')

    try:
        report = json.loads(report_path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInput(f'Unreadable report {report_path}: {exc}')

    task_kind, header, rows = PLOT_KINDS[kind]

    if report.get('kind') != task_kind:
        raise InvalidInput(f'Plot {kind} needs a {task_kind} report, got {report.get("kind")}')

    result = report.get('result')

    if report.get('status') != 'ok' or not result:
        raise InvalidInput(f'Report {report_path} holds no result')

    if kind in ('cone_section', 'reach_slice') and not (result.get('cross_section') or result.get('slice')):
        raise InvalidInput(f'Report {report_path} holds no points for {kind}')

    out = Path(out) if out else report_path.with_name(f'{report_path.stem}-{kind}.csv')
    return write_csv(out, header(result), rows(result))
