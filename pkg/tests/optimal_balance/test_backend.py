from django.core.exceptions import ImproperlyConfigured
from django.tasks import TaskResultStatus
from django.tasks import task
from django.tasks.exceptions import TaskResultDoesNotExist
from django.tasks.signals import task_enqueued
from django.tasks.signals import task_finished
from django.tasks.signals import task_started
from django.test import SimpleTestCase

from optimal_balance.backend import ThreadPoolBackend
from optimal_balance.tasks import run_sweep_cell
from optimal_balance.tasks import validate_payload
from tests.optimal_balance.utils import capture_signals


@task
def add_task(a, b):
    return a + b


@task
def failing_task():
    raise ValueError("boom")


def build_settings(**kwargs):
    return {
        "QUEUES": [],
        "OPTIONS": kwargs,
    }


def cell_payload(**kwargs):
    payload = {
        "potential": "poly:0",
        "dim": 2,
        "ramp": "poly:2",
        "eps": 0.1,
        "T": 1.0,
        "q_star": [1.0, 0.0],
        "p0": None,
        "max_iter": 5,
        "rtol": 1e-12,
        "alpha": 1.0,
        "kappa": 10,
        "n": 2,
    }
    payload.update(kwargs)

    return payload


class ThreadPoolBackendTests(SimpleTestCase):
    def test_it_gathers_workers(self):
        backend = ThreadPoolBackend("default", params=build_settings(WORKERS=3))
        self.assertEqual(backend.get_workers(), 3)

        backend = ThreadPoolBackend("default", params=build_settings())
        self.assertGreaterEqual(backend.get_workers(), 1)

        for workers in (0, -2, "4"):
            backend = ThreadPoolBackend("default", params=build_settings(WORKERS=workers))
            with self.assertRaises(ImproperlyConfigured):
                backend.get_workers()

    def test_it_runs_the_task(self):
        backend = ThreadPoolBackend("default", params=build_settings(WORKERS=1))

        with capture_signals(task_enqueued, task_started, task_finished) as signals:
            result = backend.enqueue(add_task, [1, 2], {})
            finished = backend.get_result(result.id)

        self.assertEqual(finished.id, result.id)
        self.assertEqual(finished.status, TaskResultStatus.SUCCESSFUL)
        self.assertEqual(finished.return_value, 3)
        self.assertEqual(len(finished.worker_ids), 1)
        self.assertIsNotNone(finished.enqueued_at)
        self.assertIsNotNone(finished.started_at)
        self.assertIsNotNone(finished.finished_at)

        self.assertEqual(len(signals), 3)
        for _, kwargs in signals:
            self.assertEqual(kwargs["task_result"].id, result.id)

    def test_it_announces_before_running(self):
        backend = ThreadPoolBackend("default", params=build_settings(WORKERS=1))

        with capture_signals(task_enqueued, task_started, task_finished) as signals:
            backend.get_result(backend.enqueue(add_task, [1, 2], {}).id)

        self.assertEqual([kwargs["signal"] for _, kwargs in signals], [task_enqueued, task_started, task_finished])

    def test_it_forgets_collected_results(self):
        backend = ThreadPoolBackend("default", params=build_settings(WORKERS=2))

        ids = [backend.enqueue(add_task, [i, 1], {}).id for i in range(4)]
        self.assertEqual([backend.get_result(result_id).return_value for result_id in ids], [1, 2, 3, 4])
        self.assertEqual(backend.futures, {})

        with self.assertRaises(TaskResultDoesNotExist):
            backend.get_result(ids[0])

    def test_it_records_failures(self):
        backend = ThreadPoolBackend("default", params=build_settings(WORKERS=1))

        result = backend.get_result(backend.enqueue(failing_task, [], {}).id)

        self.assertEqual(result.status, TaskResultStatus.FAILED)
        self.assertEqual(len(result.errors), 1)
        self.assertEqual(result.errors[0].exception_class_path, "builtins.ValueError")
        self.assertIn("boom", result.errors[0].traceback)

    def test_it_rejects_unknown_results(self):
        backend = ThreadPoolBackend("default", params=build_settings())

        with self.assertRaises(TaskResultDoesNotExist):
            backend.get_result("missing")

    def test_it_resizes_the_pool(self):
        backend = ThreadPoolBackend("default", params=build_settings(WORKERS=1))

        backend.configure_pool(3)
        self.assertEqual(backend.get_executor()._max_workers, 3)

        with self.assertRaises(ValueError):
            backend.configure_pool(0)

    def test_it_is_reachable_through_the_task_api(self):
        result = add_task.enqueue(2, 5)

        self.assertEqual(result.backend, "default")
        self.assertEqual(add_task.get_backend().get_result(result.id).return_value, 7)


class SweepCellTaskTests(SimpleTestCase):
    def test_it_runs_one_cell(self):
        outcome = run_sweep_cell.call(cell_payload())

        self.assertTrue(outcome["converged"])
        self.assertEqual(outcome["cycles"], 1)
        self.assertEqual(outcome["plateau_residual"], 0.0)
        self.assertEqual(outcome["balance_residual"], 0.0)

    def test_it_validates_the_payload(self):
        payload = cell_payload()
        del payload["ramp"]

        with self.assertRaises(ValueError) as cm:
            validate_payload(payload)
        self.assertIn("ramp", str(cm.exception))

        with self.assertRaises(ValueError):
            validate_payload(cell_payload(q_star=(1.0, 0.0)))
