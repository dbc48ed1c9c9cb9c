# Writes golden_datagram.bin independently of the Rust encoder.
import struct

out = bytearray()
for k in range(12):
    out += bytes([0xFF, 0xEE])
    out += struct.pack("<H", 9000 + 20 * k)
    for j in range(32):
        out += struct.pack("<HB", 5000 + 100 * k + j, (32 * k + j) % 256)
out += struct.pack("<IBB", 123456789, 0x37, 0x21)
assert len(out) == 1206
open("golden_datagram.bin", "wb").write(out)
