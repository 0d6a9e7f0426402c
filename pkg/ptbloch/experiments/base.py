import abc
import json
import os
import sys
import time

from typing import Dict, List, Optional

from ptbloch import VERSION
from ptbloch.config import DATETIME_STR, EXIT_CODE, PTB_DEBUG
from ptbloch.ptb_logging import add_file_handler, get_logger
from ptbloch.reporting import write_csv_file, write_json_file
from ptbloch.utils import PTBJsonEncoder, host_info


class Experiment(abc.ABC):
    """
    One CLI subcommand. Data files go to <out>/<command>/ under fixed names so a rerun from the embedded
    config overwrites them with identical content; everything that changes between runs (datetime, runtime,
    host) is kept in the separate metadata file.
    """

    EXPERIMENT_TYPE = None

    def __init__(self, config, logger=None, run_datetime=None, debug=False) -> None:
        self.config = config
        self.debug = debug or PTB_DEBUG
        self.logger = logger or get_logger(f"experiments.{self.EXPERIMENT_TYPE.value}")

        if not run_datetime:
            self.logger.debug('No run datetime provided. Using current datetime.')
        self.run_datetime = run_datetime if run_datetime else DATETIME_STR
        self.runtime = 0
        self.exit_code = None

        self.output_files = list()
        self.summary = dict()
        self.issues = dict()
        self.run_result_output = self.generate_output_location()
        os.makedirs(self.run_result_output, exist_ok=True)

        self.metadata_filename = f"{self.EXPERIMENT_TYPE.value}_{self.run_datetime}_metadata.json"
        self.metadata_file_path = os.path.join(self.run_result_output, self.metadata_filename)
        self.log_file_path = os.path.join(self.run_result_output,
                                          f"{self.EXPERIMENT_TYPE.value}_{self.run_datetime}.log")
        self._file_handler = None

        self.logger.status(f'Experiment results directory: {self.run_result_output}')

    def generate_output_location(self) -> str:
        if not self.EXPERIMENT_TYPE:
            raise ValueError('No experiment specified. Unable to generate output location')
        return os.path.join(self.config.out, self.EXPERIMENT_TYPE.value)

    def output_path(self, filename: str) -> str:
        return os.path.join(self.run_result_output, filename)

    def write_csv(self, filename: str, rows: List[Dict]) -> str:
        path = write_csv_file(rows, self.output_path(filename), logger=self.logger)
        self.output_files.append(path)
        return path

    def write_json(self, filename: str, results) -> str:
        payload = dict(command=self.EXPERIMENT_TYPE.value, version=VERSION, config=self.config.to_dict(),
                       results=results)
        path = write_json_file(payload, self.output_path(filename), logger=self.logger)
        self.output_files.append(path)
        return path

    def add_output(self, path: Optional[str]):
        if path:
            self.output_files.append(path)

    @property
    def metadata(self):
        return dict(
            experiment_type=self.EXPERIMENT_TYPE.name,
            name=self.config.name,
            run_datetime=self.run_datetime,
            runtime=self.runtime,
            exit_code=int(self.exit_code) if self.exit_code is not None else None,
            argv=list(sys.argv),
            version=VERSION,
            config=self.config.to_dict(),
            output_files=list(self.output_files),
            host=host_info(),
        )

    def write_metadata(self):
        with open(self.metadata_file_path, 'w+') as fd:
            json.dump(self.metadata, fd, indent=2, cls=PTBJsonEncoder)

        if self.debug:
            json.dump(self.metadata, sys.stdout, indent=2, cls=PTBJsonEncoder)

    @abc.abstractmethod
    def _run(self) -> EXIT_CODE:
        """
        Run the experiment and write its data files.
        :return: EXIT_CODE
        """
        raise NotImplementedError

    def run(self) -> EXIT_CODE:
        root_logger = get_logger("ptbloch")
        self._file_handler = add_file_handler(root_logger, self.log_file_path)
        start_time = time.time()
        try:
            self.exit_code = self._run()
        finally:
            self.runtime = time.time() - start_time
            root_logger.removeHandler(self._file_handler)
            self._file_handler.close()
        return self.exit_code
