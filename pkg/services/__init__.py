# Services package for VNF placement and chaining with particle swarm optimization
