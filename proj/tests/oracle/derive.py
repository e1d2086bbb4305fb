# Independent oracle for frozen test values (hashlib + mpmath). Run: python3 derive.py
import hashlib
import mpmath as mp

mp.mp.dps = 60

def sha(b):
    return hashlib.sha256(b).digest()

def H(x):
    return sha(b"\x00" + x)

def Hp(x):
    return sha(b"\x01" + x)

seed = bytes(range(32))
print("chain_seed_0_31_step1", H(seed).hex())
print("chain_seed_0_31_step2", H(H(seed)).hex())
zero = bytes(32)
print("interval_prev_of_zero", H(zero).hex())
print("interval_mac_of_zero", Hp(zero).hex())

# credential chain with plain SHA-256: C_w = sha^w(rnd), SN_w = sha(SN_{w-1} || C_w)
sn0 = bytes([0xAA]) * 32
rnd = bytes([0x55]) * 32
c, sn = rnd, sn0
for w in range(1, 4):
    c = sha(c)
    sn = sha(sn + c)
    print(f"serial_{w}", sn.hex(), f"chain_{w}", c.hex())

def fp(m, k, n):
    m, k, n = mp.mpf(m), mp.mpf(k), mp.mpf(n)
    return (1 - (1 - 1 / m) ** (k * n)) ** k

def params(n, p):
    n, p = mp.mpf(n), mp.mpf(p)
    m = int(mp.ceil(-n * mp.log(p) / mp.log(2) ** 2))
    k = int(mp.ceil(-mp.log(p, 2)))
    while fp(m, k, n) > p:
        m += 1
    return m, k

print("bf_params(10,1e-20)", params(10, mp.mpf("1e-20")))
print("bf_params(7,1e-30)", params(7, mp.mpf("1e-30")))
print("bf_params(1,0.5)", params(1, mp.mpf("0.5")))
print("fp(22,3,3)", mp.nstr(fp(22, 3, 3), 15))
k800 = int(mp.nint(mp.mpf(800) / 10 * mp.log(2)))
print("k_opt(800,10)", k800, "fp n=5", mp.nstr(fp(800, k800, 5), 6), "fp n=10", mp.nstr(fp(800, k800, 10), 6))
for p, k in (("1e-20", 67), ("1e-22", 73), ("1e-23", 76)):
    t = k / (mp.mpf(p) * mp.mpf("1.6e18"))
    print("attack", p, k, mp.nstr(t, 12), "s", mp.nstr(t / 3600, 8), "h")
for n in (20,):
    m, k = params(n, mp.mpf("1e-20"))
    print("fingerprint-size n=20 p=1e-20 bytes", (m + 7) // 8)

def positions(x, m, k):
    seed = sha(x)
    out = []
    for j in range(k):
        if j % 8 == 0:
            block = sha(seed + (j // 8).to_bytes(4, "big"))
        lane = j % 8
        out.append(int.from_bytes(block[4 * lane:4 * lane + 4], "big") % m)
    return out

print("bloom positions of bytes(range(32)), m=1000 k=10", positions(bytes(range(32)), 1000, 10))
bits = bytearray(125)
for p in positions(bytes(range(32)), 1000, 10):
    bits[p // 8] |= 0x80 >> (p % 8)
print("packed", bits.hex())
