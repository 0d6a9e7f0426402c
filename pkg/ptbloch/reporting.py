import csv
import json
import os

from typing import Dict, Iterable, List, Optional

from ptbloch.rules import CheckState, Issue
from ptbloch.utils import PTBJsonEncoder, flatten_nested_dict


def _fieldnames(rows: List[Dict]) -> List[str]:
    # Column order follows first appearance so the documented CSV layouts are kept
    fieldnames = []
    for row in rows:
        for key in row:
            if key not in fieldnames:
                fieldnames.append(key)
    return fieldnames


def write_csv_file(rows: Iterable[Dict], path: str, logger=None) -> str:
    rows = [flatten_nested_dict(r) for r in rows]
    if logger:
        logger.verbose(f'Writing {len(rows)} rows to {path}')
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, 'w', newline='') as file_object:
        csv_writer = csv.DictWriter(f=file_object, fieldnames=_fieldnames(rows), lineterminator='\n')
        csv_writer.writeheader()
        for row in rows:
            csv_writer.writerow({k: repr(float(v)) if isinstance(v, float) else v for k, v in row.items()})
    return path


def write_json_file(data, path: str, logger=None) -> str:
    if logger:
        logger.verbose(f'Writing results to {path}')
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, 'w') as f:
        json.dump(data, f, indent=2, cls=PTBJsonEncoder)
        f.write("\n")
    return path


def _format_value(value) -> str:
    if isinstance(value, complex):
        return f"{value.real:.10g}{value.imag:+.10g}i"
    if isinstance(value, float):
        return f"{value:.6g}"
    if isinstance(value, (list, tuple)):
        return ", ".join(_format_value(v) for v in value)
    return str(value)


def print_summary(title: str, sections: Dict[str, Dict], issues: Optional[Dict[str, List[Issue]]] = None,
                  outputs: Optional[List[str]] = None, state: Optional[CheckState] = None):
    """
    Console banner for one run: one block per section (a resonance, a locus start...) with its headline
    numbers and any tolerance issues, then the files written.
    """
    issues = issues or {}
    print(f"\n========================= {title} =========================")
    if state is not None:
        print(f"\tOverall: {state.value.upper()}")
    for name, metrics in sections.items():
        print(f"\n------------------------- {name} -------------------------")
        for metric, value in metrics.items():
            print(f'\t- {metric}: {_format_value(value)}')
        section_issues = [i for i in issues.get(name, []) if i.validation != CheckState.PASSED]
        if section_issues:
            print(f'\t    Issues:')
            for issue in section_issues:
                print(f'\t\t- {issue}')
    if outputs:
        print(f"\n------------------------- Outputs -------------------------")
        for path in outputs:
            print(f'\t- {path}')
    print()
