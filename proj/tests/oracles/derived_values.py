"""Independent reference values for the unit tests (stdlib only).

Run: python3 tests/oracles/derived_values.py
Each printed value is frozen into the C++ tests that cite it.
"""
import math


def softplus(x):
    return max(x, 0.0) + math.log1p(math.exp(-abs(x)))


def linear_alpha_bar(steps, beta_start, beta_end):
    out, prod = [], 1.0
    for t in range(steps):
        beta = beta_start if steps == 1 else beta_start + (beta_end - beta_start) * t / (steps - 1)
        prod *= 1.0 - beta
        out.append(prod)
    return out


def main():
    print("alpha_bar T=2 beta=0.1:", linear_alpha_bar(2, 0.1, 0.1))
    ab = linear_alpha_bar(50, 1e-4, 0.02)
    print("alpha_bar T=50 [0], [25], [49]:", repr(ab[0]), repr(ab[25]), repr(ab[49]))
    print("forward 0.8*1 + 0.6*0.5:", 0.8 * 1.0 + 0.6 * 0.5)

    # Loss stand-ins: errors 0.25, 0.16, 0.49, 0.25 at coefficient 1.
    dp, dl = 0.25 - 0.16, 0.49 - 0.25
    inner = -1.0 * (dp - dl)
    print("stand-in delta_pref, delta_less, margin, inner:", dp, dl, dl - dp, inner)
    print("stand-in loss:", repr(softplus(-inner)))
    print("sigmoid(ln 3):", 1.0 / (1.0 + math.exp(-math.log(3.0))))
    print("ln 2:", repr(math.log(2.0)))

    # Hand forward pass, d=k=h=1, T=1, t=0: input [x_t, z, 0, 0, 1].
    # w1 = [1, 0, 0, 0, 0], b1 = 0, w2 = [1], b2 = 0, w3 = [1], b3 = 0.
    x = 0.7
    print("tanh(tanh(0.7)):", repr(math.tanh(math.tanh(x))))
    # Same net with w1 picking the caption (z = 1) and b1 = -0.25, b3 = 0.1.
    print("tanh(tanh(1 - 0.25)) + 0.1:", repr(math.tanh(math.tanh(0.75)) + 0.1))

    print("similarity (sqrt2/2, sqrt2/2) vs e1:", repr(100.0 * math.sqrt(0.5)))
    print("caption rho=0.5 e1,e2:", math.sqrt(0.5), math.sqrt(0.5))
    print("denoiser count d=k=h=1:", (1 + 1 + 3 + 1) * 1 + (1 + 1) * 1 + (1 + 1) * 1)
    print("denoiser count d=8 k=4 h=32:", (8 + 4 + 3 + 1) * 32 + (32 + 1) * 32 + (32 + 1) * 8)

    # Overlap example: preferred {30, 32}, less-preferred {28, 30}.
    print("overlap:", (30 + 32) / 2, (28 + 30) / 2, (30 + 32) / 2 - (28 + 30) / 2)

    # Midpoint rule: weak band [80, 95) midpoint 87.5; |86-87.5| < |91-87.5|.
    print("weak midpoint:", (80 + 95) / 2, abs(86 - 87.5), abs(91 - 87.5))


if __name__ == "__main__":
    main()
