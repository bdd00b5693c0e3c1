import pytest


@pytest.fixture(scope="session")
def dsq_smoke():
    """The smallest 2CL instance reduced without protector channels, solved exactly.

    Takes a minute or two; shared by the reduction tests and the acceptance run.
    """
    import time

    from nclforge.doushouqi import GameGraph, reduce_2cl_to_doushouqi, smallest_2cl
    from nclforge.games import solve_2cl

    g = smallest_2cl()
    state, trace = reduce_2cl_to_doushouqi(g, protector_depth=0)
    t0 = time.perf_counter()
    graph = GameGraph(state)
    report = graph.report()
    seconds = time.perf_counter() - t0
    return {"graph": g, "state": state, "trace": trace, "report": report,
            "winner_2cl": solve_2cl(g).verdict, "seconds": seconds}
