import pytest

from drybench.bench import Bench
from drybench.config import BenchConfig, BridgeConfig
from drybench.gateway.poller import PollConfig
from drybench.link import LinkConfig


def make_bench(ber=0.0, drop=0.0, seed=1, poll_period_ms=500.0,
               response_timeout_ms=200.0, max_retries=2, tick_ms=100.0,
               time_scale=1.0) -> Bench:
    config = BenchConfig(
        link=LinkConfig(bit_error_rate=ber, drop_rate=drop, seed=seed),
        poll=PollConfig(poll_period_ms=poll_period_ms,
                        response_timeout_ms=response_timeout_ms,
                        max_retries=max_retries),
        tick_ms=tick_ms,
        time_scale=time_scale,
        bridge=BridgeConfig(),
    )
    return Bench(config)


@pytest.fixture
def bench():
    return make_bench()
