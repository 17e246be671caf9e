"""Reference Canny built from scipy.ndimage pieces, cross-checked against
OpenCV on integer gradients. Prints the edge coordinates of a fixed set of
test images so they can be frozen into the C++ tests.

    python3 canny_oracle.py
"""
import numpy as np
import scipy.ndimage as ndi

ROWS, COLS = 24, 32


def images():
    r, c = np.mgrid[0:ROWS, 0:COLS]
    out = {}
    out["step"] = np.where(c >= 16, 100.0, 20.0)
    out["step_ramp"] = np.where(c >= 16, 70.0 + 0.2 * r, 25.0)
    out["disk"] = np.where((r - 12) ** 2 + (c - 16) ** 2 < 49, 90.0, 30.0)
    out["hash"] = ((r * 37 + c * 101) % 17).astype(float) + np.where(c >= 20, 40.0, 0.0)
    out["flat"] = np.full((ROWS, COLS), 33.0)
    return out


def canny(img, sigma=1.0, truncate=4.0, low_frac=0.1, high_frac=0.2):
    img = img.astype(float)
    lo, hi = img.min(), img.max()
    img = (img - lo) / (hi - lo) if hi > lo else np.zeros_like(img)
    s = ndi.gaussian_filter1d(img, sigma, axis=0, mode="nearest", truncate=truncate)
    s = ndi.gaussian_filter1d(s, sigma, axis=1, mode="nearest", truncate=truncate)
    dx = ndi.correlate1d(ndi.correlate1d(s, [-1, 0, 1], axis=1, mode="nearest"), [1, 2, 1], axis=0, mode="nearest")
    dy = ndi.correlate1d(ndi.correlate1d(s, [-1, 0, 1], axis=0, mode="nearest"), [1, 2, 1], axis=1, mode="nearest")
    m = np.hypot(dx, dy)
    peak = m.max()
    if peak <= 0:
        return np.zeros(img.shape, bool)
    low, high = low_frac * peak, high_frac * peak

    pad = np.pad(m, 1, constant_values=np.inf)

    def nb(dr, dc):
        return pad[1 + dr:1 + dr + ROWS, 1 + dc:1 + dc + COLS]

    ax, ay = np.abs(dx), np.abs(dy)
    t22 = ax * 0.41421356237309504880
    horiz = ay < t22
    vert = (~horiz) & (ay > t22 + 2 * ax)
    diag = ~(horiz | vert)
    s_pos = (dx < 0) == (dy < 0)
    keep = np.zeros_like(horiz)
    keep |= horiz & (m > nb(0, -1)) & (m >= nb(0, 1))
    keep |= vert & (m > nb(-1, 0)) & (m >= nb(1, 0))
    keep |= diag & s_pos & (m > nb(-1, -1)) & (m > nb(1, 1))
    keep |= diag & ~s_pos & (m > nb(-1, 1)) & (m > nb(1, -1))
    keep &= m > low
    keep[0, :] = keep[-1, :] = keep[:, 0] = keep[:, -1] = False

    labels, n = ndi.label(keep, structure=np.ones((3, 3)))
    strong = np.unique(labels[keep & (m > high)])
    return np.isin(labels, strong[strong > 0])


def opencv_crosscheck(img):
    """Same pipeline but with OpenCV doing NMS and hysteresis on gradients
    scaled to int16; only meaningful where no ties sit near rounding."""
    import cv2
    img = img.astype(float)
    img = (img - img.min()) / (img.max() - img.min())
    s = ndi.gaussian_filter(img, 1.0, mode="nearest", truncate=4.0)
    dx = ndi.sobel(s, axis=1, mode="nearest")
    dy = ndi.sobel(s, axis=0, mode="nearest")
    scale = 8000.0 / max(np.abs(dx).max(), np.abs(dy).max())
    ix = np.round(dx * scale).astype(np.int16)
    iy = np.round(dy * scale).astype(np.int16)
    mag = np.hypot(ix.astype(float), iy.astype(float))
    e = cv2.Canny(ix, iy, 0.1 * mag.max(), 0.2 * mag.max(), L2gradient=True) > 0
    e[0, :] = e[-1, :] = e[:, 0] = e[:, -1] = False
    return e


if __name__ == "__main__":
    for name, img in images().items():
        e = canny(img)
        coords = [int(r * COLS + c) for r, c in zip(*np.nonzero(e))]
        cols = sorted(set(int(c) for c in np.nonzero(e)[1]))
        line = f"{name}: count={len(coords)} cols={cols}"
        if name in ("step", "step_ramp", "disk"):
            line += f" opencv_agrees={bool((opencv_crosscheck(img) == e).all())}"
        print(line)
        print("  idx=" + ",".join(map(str, coords)))
