"""Circuit texts shared by several test modules."""

MINIMAL_DETECTOR = """\
RX 0
R 1
R_Z(0.125) 0  # 0.125*pi rotation around Z
PAULI_CHANNEL_1(0.1, 0.1, 0.2) 0 1
H 0
CNOT 0 1
DEPOLARIZE2(0.01) 0 1
M 0 1
DETECTOR rec[-1] rec[-2]
"""

# Two distance-2 repetition blocks with logical X rotations between two
# stabilizer rounds and a transversal CNOT.
TWO_BLOCK = """\
R 0 1 2 3 4 5 6 7
CX 0 4 1 4 2 5 3 5
X_ERROR(0.05) 0 1 2 3
M 4 5
DETECTOR rec[-2]
DETECTOR rec[-1]
CX 0 1
R_X(0.125) 0
CX 0 1
Z_ERROR(0.05) 0 1 2 3
CX 2 3
R_X(0.125) 2
CX 2 3
CX 0 2 1 3
CX 0 6 1 6 2 7 3 7
X_ERROR(0.05) 0 1 2 3
M 6 7
DETECTOR rec[-2] rec[-4]
DETECTOR rec[-1] rec[-3]
M 0 1 2 3
DETECTOR rec[-4] rec[-3] rec[-6]
DETECTOR rec[-2] rec[-1] rec[-5]
OBSERVABLE_INCLUDE(0) rec[-4]
OBSERVABLE_INCLUDE(1) rec[-2]
"""

MERGE_026 = """\
X_ERROR(0.1) 0
X_ERROR(0.2) 0
M 0
DETECTOR rec[-1]
"""

NOISELESS_MEMORY = """\
R 0 1 2 3 4
CX 0 3 1 3 1 4 2 4
MR 3 4
DETECTOR rec[-2]
DETECTOR rec[-1]
CX 0 3 1 3 1 4 2 4
MR 3 4
DETECTOR rec[-2] rec[-4]
DETECTOR rec[-1] rec[-3]
M 0 1 2
DETECTOR rec[-3] rec[-2] rec[-5]
DETECTOR rec[-2] rec[-1] rec[-4]
OBSERVABLE_INCLUDE(0) rec[-1]
"""

HTH = "H 0\nT 0\nH 0\nM 0\n"
