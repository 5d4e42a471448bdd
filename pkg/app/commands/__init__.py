from . import cost, design, graph_info, simulate, single, sweep, verify

# 所有子命令
commands = [
    design.design,
    verify.verify,
    cost.cost,
    simulate.simulate,
    sweep.sweep,
    graph_info.graph_info,
    single.single,
]
