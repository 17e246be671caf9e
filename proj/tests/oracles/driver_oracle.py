"""Independent re-implementation of the vendor driver's extraction and
temperature conversion, written straight from the C source against raw
EEPROM words. Used to freeze expected values for the C++ unit tests.

usage: python3 driver_oracle.py mem.json
"""
import json
import math
import sys


def s(v, bits):
    return v - (1 << bits) if v >= (1 << (bits - 1)) else v


def extract(ee):
    p = {}
    kvdd = s((ee[51] & 0xFF00) >> 8, 8) * 32
    vdd25 = (((ee[51] & 0xFF) - 256) << 5) - 8192
    p.update(kVdd=kvdd, vdd25=vdd25)
    p["KvPTAT"] = s((ee[50] & 0xFC00) >> 10, 6) / 4096
    p["KtPTAT"] = s(ee[50] & 0x3FF, 10) / 8
    p["vPTAT25"] = s(ee[49], 16)
    p["alphaPTAT"] = (ee[16] & 0xF000) / 2 ** 14 + 8
    p["gainEE"] = s(ee[48], 16)
    p["tgc"] = s(ee[60] & 0xFF, 8) / 32
    p["resolutionEE"] = (ee[56] & 0x3000) >> 12
    p["KsTa"] = s((ee[60] & 0xFF00) >> 8, 8) / 8192
    step = ((ee[63] & 0x3000) >> 12) * 10
    ct2 = ((ee[63] & 0xF0) >> 4) * step
    ct3 = ct2 + ((ee[63] & 0xF00) >> 8) * step
    p["ct"] = [-40, 0, ct2, ct3]
    kstoscale = 1 << ((ee[63] & 0xF) + 8)
    raw = [ee[61] & 0xFF, (ee[61] & 0xFF00) >> 8, ee[62] & 0xFF, (ee[62] & 0xFF00) >> 8]
    p["ksTo"] = [s(v, 8) / kstoscale for v in raw]
    alpha_scale_cp = ((ee[32] & 0xF000) >> 12) + 27
    off0 = s(ee[58] & 0x3FF, 10)
    off1 = s((ee[58] & 0xFC00) >> 10, 6) + off0
    a0 = s(ee[57] & 0x3FF, 10) / 2 ** alpha_scale_cp
    a1 = (1 + s((ee[57] & 0xFC00) >> 10, 6) / 128) * a0
    p["cpAlpha"] = [a0, a1]
    p["cpOffset"] = [off0, off1]
    kta_scale1 = ((ee[56] & 0xF0) >> 4) + 8
    kv_scale = (ee[56] & 0xF00) >> 8
    p["cpKta"] = s(ee[59] & 0xFF, 8) / 2 ** kta_scale1
    p["cpKv"] = s((ee[59] & 0xFF00) >> 8, 8) / 2 ** kv_scale
    # alpha
    acc_rem = ee[32] & 0xF
    acc_col = (ee[32] & 0xF0) >> 4
    acc_row = (ee[32] & 0xF00) >> 8
    alpha_scale = ((ee[32] & 0xF000) >> 12) + 30
    alpha_ref = ee[33]
    rows = [s((ee[34 + i // 4] >> (4 * (i % 4))) & 0xF, 4) for i in range(24)]
    cols = [s((ee[40 + j // 4] >> (4 * (j % 4))) & 0xF, 4) for j in range(32)]
    alpha = []
    for i in range(24):
        for j in range(32):
            q = 32 * i + j
            v = s((ee[64 + q] & 0x3F0) >> 4, 6) * (1 << acc_rem)
            v += alpha_ref + (rows[i] << acc_row) + (cols[j] << acc_col)
            v /= 2 ** alpha_scale
            v -= p["tgc"] * (a0 + a1) / 2
            alpha.append(v)
    p["alpha"] = alpha
    # offset
    occ_rem = ee[16] & 0xF
    occ_col = (ee[16] & 0xF0) >> 4
    occ_row = (ee[16] & 0xF00) >> 8
    oref = s(ee[17], 16)
    orows = [s((ee[18 + i // 4] >> (4 * (i % 4))) & 0xF, 4) for i in range(24)]
    ocols = [s((ee[24 + j // 4] >> (4 * (j % 4))) & 0xF, 4) for j in range(32)]
    offset = []
    for i in range(24):
        for j in range(32):
            q = 32 * i + j
            v = s((ee[64 + q] & 0xFC00) >> 10, 6) * (1 << occ_rem)
            v += oref + (orows[i] << occ_row) + (ocols[j] << occ_col)
            offset.append(v)
    p["offset"] = offset
    # kta
    kta_rc = [s((ee[54] & 0xFF00) >> 8, 8), s((ee[55] & 0xFF00) >> 8, 8),
              s(ee[54] & 0xFF, 8), s(ee[55] & 0xFF, 8)]
    kta_scale2 = ee[56] & 0xF
    kta = []
    for q in range(768):
        split = 2 * (q // 32 - (q // 64) * 2) + q % 2
        v = s((ee[64 + q] & 0xE) >> 1, 3) * (1 << kta_scale2)
        v += kta_rc[split]
        kta.append(v / 2 ** kta_scale1)
    p["kta"] = kta
    kvt = [s((ee[52] & 0xF000) >> 12, 4), s((ee[52] & 0xF0) >> 4, 4),
           s((ee[52] & 0xF00) >> 8, 4), s(ee[52] & 0xF, 4)]
    p["kv"] = [kvt[2 * (q // 32 - (q // 64) * 2) + q % 2] / 2 ** kv_scale for q in range(768)]
    cal = ((ee[10] & 0x0800) >> 4) ^ 0x80
    p["calibrationModeEE"] = cal
    p["ilChessC"] = [s(ee[53] & 0x3F, 6) / 16, s((ee[53] & 0x7C0) >> 6, 5) / 2,
                     s((ee[53] & 0xF800) >> 11, 5) / 8]

    def storage(vals, thr):
        t = max(vals)
        k = 0
        while t < thr:
            t *= 2
            k += 1
        return k

    p["s_alpha"] = storage([1e-6 / a for a in alpha], 32767.4)
    p["s_kta"] = storage([abs(v) for v in kta], 63.4)
    p["s_kv"] = storage([abs(v) for v in p["kv"]], 63.4)
    return p


def to_frame(p, pixels, aux, eps=0.95):
    res_ram = (aux["control_word"] >> 10) & 3
    rc = 2 ** p["resolutionEE"] / 2 ** res_ram
    vdd = (rc * aux["vdd_raw"] - p["vdd25"]) / p["kVdd"] + 3.3
    ptat = aux["vptat_raw"]
    art = ptat / (ptat * p["alphaPTAT"] + aux["vbe_raw"]) * 2 ** 18
    ta = (art / (1 + p["KvPTAT"] * (vdd - 3.3)) - p["vPTAT25"]) / p["KtPTAT"] + 25
    tr = ta - 8
    ta4 = (ta + 273.15) ** 4
    tr4 = (tr + 273.15) ** 4
    tatr = tr4 - (tr4 - ta4) / eps
    ks = p["ksTo"]
    ct = p["ct"]
    corr = [1 / (1 + ks[0] * 40), 1, 1 + ks[1] * ct[2]]
    corr.append(corr[2] * (1 + ks[2] * (ct[3] - ct[2])))
    gain = p["gainEE"] / aux["gain_raw"]
    mode = (aux["control_word"] & 0x1000) >> 5
    dta, dvdd = ta - 25, vdd - 3.3
    cpc = (1 + p["cpKta"] * dta) * (1 + p["cpKv"] * dvdd)
    cp = [aux["cp_sp0_raw"] * gain - p["cpOffset"][0] * cpc, 0]
    if mode == p["calibrationModeEE"]:
        cp[1] = aux["cp_sp1_raw"] * gain - p["cpOffset"][1] * cpc
    else:
        cp[1] = aux["cp_sp1_raw"] * gain - (p["cpOffset"][1] + p["ilChessC"][0]) * cpc
    out = []
    for n in range(768):
        il = n // 32 - (n // 64) * 2
        chess = il ^ (n - (n // 2) * 2)
        conv = ((n + 2) // 4 - (n + 3) // 4 + (n + 1) // 4 - n // 4) * (1 - 2 * il)
        pat = il if mode == 0 else chess
        ir = pixels[n] * gain
        ir -= p["offset"][n] * (1 + p["kta"][n] * dta) * (1 + p["kv"][n] * dvdd)
        if mode != p["calibrationModeEE"]:
            ir += p["ilChessC"][2] * (2 * il - 1) - p["ilChessC"][1] * conv
        ir -= p["tgc"] * cp[pat]
        ir /= eps
        a = p["alpha"][n] * (1 + p["KsTa"] * dta)
        sx = math.sqrt(math.sqrt(a ** 3 * (ir + a * tatr))) * ks[1]
        to = math.sqrt(math.sqrt(ir / (a * (1 - ks[1] * 273.15) + sx) + tatr)) - 273.15
        r = 3
        if to < ct[1]:
            r = 0
        elif to < ct[2]:
            r = 1
        elif to < ct[3]:
            r = 2
        to = math.sqrt(math.sqrt(ir / (a * corr[r] * (1 + ks[r] * (to - ct[r]))) + tatr)) - 273.15
        out.append(to)
    return vdd, ta, out


if __name__ == "__main__":
    mem = json.load(open(sys.argv[1]))
    ee = mem["words"]
    p = extract(ee)
    for k in ["kVdd", "vdd25", "KvPTAT", "KtPTAT", "vPTAT25", "alphaPTAT", "gainEE", "tgc",
              "cpKv", "cpKta", "resolutionEE", "calibrationModeEE", "KsTa", "ksTo", "ct",
              "s_alpha", "s_kta", "s_kv", "cpAlpha", "cpOffset", "ilChessC"]:
        print(k, repr(p[k]))
    for q in [0, 1, 33, 400, 767]:
        print("pix", q, repr(p["alpha"][q]), p["offset"][q], repr(p["kta"][q]), repr(p["kv"][q]))
    aux = dict(vdd_raw=-12864, vptat_raw=1500, vbe_raw=18746, gain_raw=6276,
               cp_sp0_raw=-80, cp_sp1_raw=-75, control_word=0x1901)
    pixels = [(i * 37) % 900 - 100 for i in range(768)]
    vdd, ta, t = to_frame(p, pixels, aux)
    print("vdd", repr(vdd), "ta", repr(ta))
    for q in [0, 1, 33, 400, 767]:
        print("T", q, repr(t[q]))
    aux["control_word"] = 0x0901  # interleaved readout: IL chess corrections become active
    vdd, ta, t = to_frame(p, pixels, aux)
    for q in [0, 1, 33, 400, 767]:
        print("T_il", q, repr(t[q]))
