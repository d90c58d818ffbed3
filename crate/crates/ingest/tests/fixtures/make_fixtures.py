"""Builds the ingest test fixtures and their reference numbers with Pillow and colorsys."""
import colorsys
import math
import random

from PIL import Image, ImageDraw, ImageFilter

W, H = 320, 240
HUE_LO, HUE_HI, SAT_MIN, VAL_MIN = 340.0, 20.0, 0.5, 0.3


def passes(rgb):
    h, s, v = colorsys.rgb_to_hsv(*(c / 255.0 for c in rgb))
    h *= 360.0
    in_hue = h >= HUE_LO or h <= HUE_HI
    return in_hue and s >= SAT_MIN and v >= VAL_MIN


def wall():
    rnd = random.Random(7)
    img = Image.new("RGB", (W, H))
    px = img.load()
    for y in range(H):
        for x in range(W):
            g = 170 + rnd.randint(-20, 20)
            px[x, y] = (g, g - 5, g - 12)
    d = ImageDraw.Draw(img)
    # Red pattern taped on the wall.
    pts = []
    for k in range(240):
        t = 2 * math.pi * k / 240
        r = 70 + 30 * math.cos(t)
        pts.append((150 + r * math.cos(t), 120 + 0.8 * r * math.sin(t)))
    d.polygon(pts, fill=(200, 25, 30))
    d.ellipse((120, 100, 150, 130), fill=(150, 10, 20))
    # Distractors: an orange sticker and a pale pink note.
    d.rectangle((260, 20, 300, 60), fill=(240, 140, 20))
    d.rectangle((20, 180, 70, 225), fill=(240, 190, 200))
    img = img.filter(ImageFilter.GaussianBlur(1.2))
    return img


def main():
    img = wall()
    img.save("wall.png")
    count = sum(1 for p in img.get_flattened_data() if passes(p))
    with open("wall_reference.txt", "w") as f:
        f.write(f"{W} {H} {count}\n")
    with open("hsv_grid.csv", "w") as f:
        f.write("r,g,b,h,s,v\n")
        for r in range(0, 256, 51):
            for g in range(0, 256, 51):
                for b in range(0, 256, 51):
                    h, s, v = colorsys.rgb_to_hsv(r / 255, g / 255, b / 255)
                    f.write(f"{r},{g},{b},{h * 360:.12f},{s:.12f},{v:.12f}\n")


if __name__ == "__main__":
    main()
