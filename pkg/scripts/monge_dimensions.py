"""Dimensions of the space of Monge metrics and of the quadric gauge, n = 2, 3, 4.

    python3 scripts/monge_dimensions.py
"""

from hamtrio.projgeo import monge_space_dimension, plucker_relations


def main():
    for n in (2, 3, 4):
        N = n * (n + 1) // 2
        print(f"n={n}: {N * (N + 1) // 2} quadric entries, {len(plucker_relations(n))} Pluecker relations, "
              f"Monge space dimension {monge_space_dimension(n)}")


if __name__ == "__main__":
    main()
