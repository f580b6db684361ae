"""Standalone ChaCha8 stream used to cross-check seeded draws.

Usage: python3 chacha8_ref.py SEED STREAM [COUNT]
Prints the first COUNT next_u64 values of rand_chacha's ChaCha8Rng seeded
with seed_from_u64(SEED) and then set_stream(STREAM).
"""
import sys

M=0xffffffff
def rotl(x,n): return ((x<<n)|(x>>(32-n)))&M
def seed_from_u64(s):
    MUL=6364136223846793005; INC=11634580027462260723
    out=b''
    for _ in range(8):
        s=(s*MUL+INC)&((1<<64)-1)
        x=s
        xs=(((x>>18)^x)>>27)&M
        rot=x>>59
        o=((xs>>rot)|(xs<<((32-rot)&31)))&M
        out+=o.to_bytes(4,'little')
    return out
def block(key,ctr,stream,rounds=8):
    c=[0x61707865,0x3320646e,0x79622d32,0x6b206574]
    k=[int.from_bytes(key[i*4:i*4+4],'little') for i in range(8)]
    st=c+k+[ctr&M,ctr>>32,stream&M,stream>>32]
    x=st[:]
    def qr(a,b,c,d):
        x[a]=(x[a]+x[b])&M;x[d]=rotl(x[d]^x[a],16)
        x[c]=(x[c]+x[d])&M;x[b]=rotl(x[b]^x[c],12)
        x[a]=(x[a]+x[b])&M;x[d]=rotl(x[d]^x[a],8)
        x[c]=(x[c]+x[d])&M;x[b]=rotl(x[b]^x[c],7)
    for _ in range(rounds//2):
        qr(0,4,8,12);qr(1,5,9,13);qr(2,6,10,14);qr(3,7,11,15)
        qr(0,5,10,15);qr(1,6,11,12);qr(2,7,8,13);qr(3,4,9,14)
    return [(x[i]+st[i])&M for i in range(16)]


def next_u64s(seed, stream, count):
    key = seed_from_u64(seed)
    out, ctr = [], 0
    while len(out) < count:
        w = block(key, ctr, stream)
        out.extend(w[2 * i] | (w[2 * i + 1] << 32) for i in range(8))
        ctr += 1
    return out[:count]


if __name__ == "__main__":
    seed, stream = int(sys.argv[1], 0), int(sys.argv[2], 0)
    count = int(sys.argv[3]) if len(sys.argv) > 3 else 3
    for v in next_u64s(seed, stream, count):
        print(v)
