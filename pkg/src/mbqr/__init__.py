"""Measurement-based entanglement purification and repeater simulation.

The package is organized in layers:

* ``pauli``, ``local_clifford``, ``graphs`` -- exact algebra for Pauli
  strings, the 24 single-qubit Cliffords, and simple graphs.
* ``graph_state``, ``tableau``, ``statevector`` -- graph states with
  local-Clifford corrections, a stabilizer tableau with graph-state
  extraction, and a small dense simulator used as an oracle.
* ``circuits``, ``compiler``, ``protocols`` -- Clifford circuits for
  purification and entanglement swapping, their compilation into graph
  resource states via the channel-state duality, and the catalogue of
  station resources used by the repeater.
* ``purification``, ``repeater`` -- Bell-diagonal bookkeeping, noisy
  measurement-based protocol execution (exact and fast paths), and
  end-to-end repeater figures of merit.
* ``config``, ``cli``, ``plotting`` -- scenario files, command line entry
  points, and figure rendering for the report outputs.
"""

__version__ = "0.1.0"
