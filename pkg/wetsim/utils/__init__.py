from wetsim.utils.parallel import ReplicaExecutor
