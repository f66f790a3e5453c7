"""The ideal photon-number picture of the same transfer.

Lossless twin beams have a perfectly diagonal joint photon-number
distribution: signal and idler counts always agree. Demanding equal signal
counts across two such pairs therefore collapses the two idlers into the
same number state - the discrete version of the correlation transfer, with
no 3 dB cost because the selection here is infinitely sharp.

Run:  python3 demos/06_fock_ideal_model.py
"""

import numpy as np

from twinbeam_transfer import JointFockDistribution, fock_transfer


def thermal_diagonal(mean_n: float, dim: int) -> JointFockDistribution:
    n = np.arange(dim)
    weights = (mean_n / (1.0 + mean_n)) ** n
    return JointFockDistribution.from_diagonal(weights)


def main():
    print("two-level example, p(0,0) = p(1,1) = 1/2 for both pairs:")
    half = JointFockDistribution.from_diagonal([0.5, 0.5])
    joint, acceptance = fock_transfer(half, half)
    print("  idler-idler joint distribution:")
    for row in joint.matrix:
        print("   ", "  ".join("%.3f" % v for v in row))
    print("  acceptance probability %.3f, diagonal: %s"
          % (acceptance, joint.is_diagonal()))
    print()

    print("thermal-like diagonal pairs (mean photon number 1.5, dim 8):")
    pair = thermal_diagonal(1.5, 8)
    joint, acceptance = fock_transfer(pair, pair)
    n = np.arange(joint.dimension)
    marginal = joint.matrix.sum(axis=1)
    print("  acceptance probability %.4f" % acceptance)
    print("  diagonal output: %s" % joint.is_diagonal())
    print("  P(n_i1 = n_i2) = %.6f (perfect correlation)"
          % float(np.trace(joint.matrix)))
    print("  conditioned mean photon number %.3f (was %.3f per pair)"
          % (float((n * marginal).sum()),
             float((n * pair.matrix.sum(axis=1)).sum())))
    print()

    print("uncorrelated product inputs transfer nothing:")
    flat = JointFockDistribution(np.full((3, 3), 1.0 / 9.0))
    joint, acceptance = fock_transfer(flat, flat)
    print("  output stays a product distribution: %s"
          % np.allclose(joint.matrix,
                        np.outer(joint.matrix.sum(axis=1),
                                 joint.matrix.sum(axis=0))))
    print("  acceptance probability %.3f" % acceptance)


if __name__ == "__main__":
    main()
