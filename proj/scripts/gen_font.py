#!/usr/bin/env python3
"""Rasterizes DejaVu Sans Mono into the embedded 9x15 bitmap glyph table.

Usage: gen_font.py [ttf] > src/font_glyphs.inc
"""
import sys
from PIL import Image, ImageDraw, ImageFont

TTF = sys.argv[1] if len(sys.argv) > 1 else "/usr/share/fonts/truetype/dejavu/DejaVuSansMono.ttf"
SIZE, WIDTH, HEIGHT, BASELINE, THRESHOLD = 14, 9, 15, 11, 100

font = ImageFont.truetype(TTF, SIZE)
print("// Generated by scripts/gen_font.py from DejaVu Sans Mono (Bitstream Vera license).")
print(f"// {WIDTH}x{HEIGHT} cells, one uint16 per row, bit (8 - x) set for ink at column x.")
for code in range(0x21, 0x7F):
    img = Image.new("L", (WIDTH, HEIGHT), 0)
    ImageDraw.Draw(img).text((0, BASELINE), chr(code), font=font, fill=255, anchor="ls")
    rows = []
    for y in range(HEIGHT):
        bits = 0
        for x in range(WIDTH):
            if img.getpixel((x, y)) >= THRESHOLD:
                bits |= 1 << (WIDTH - 1 - x)
        rows.append(f"0x{bits:03X}")
    name = chr(code).replace("\\", "backslash")
    print("{{" + ", ".join(rows) + "}},  // " + f"0x{code:02X} {name}")
