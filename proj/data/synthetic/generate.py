"""Writes the synthetic fixture: 20 images, 3 annotated objects each.

Images are flat-colored PNGs with one filled rectangle per object so the
boxes are visible when inspected. Rerunning overwrites with identical bytes.
"""
import json
import random
from pathlib import Path

from PIL import Image, ImageDraw

ROOT = Path(__file__).resolve().parent

EVENTS = {
    "Life.Die": ["Victim", "Agent", "Instrument"],
    "Movement.Transport": ["Agent", "Artifact", "Instrument", "Origin", "Destination"],
    "Conflict.Attack": ["Attacker", "Target", "Instrument"],
    "Conflict.Demonstrate": ["Demonstrator", "Instrument", "Police"],
    "Justice.ArrestJail": ["Agent", "Person", "Instrument"],
    "Transaction.TransferMoney": ["Giver", "Recipient", "Money"],
}

SIZE = 128


def main():
    rng = random.Random(20240521)
    names = list(EVENTS)
    (ROOT / "images").mkdir(exist_ok=True)
    images = []
    for i in range(20):
        event = names[i % len(names)]
        roles = EVENTS[event]
        # Every fourth image repeats its first role, like crowds of demonstrators.
        picked = rng.sample(roles, 3) if i % 4 else [roles[0], roles[0], roles[1]]
        img = Image.new("RGB", (SIZE, SIZE), (235, 235, 230))
        draw = ImageDraw.Draw(img)
        objects = []
        for j, role in enumerate(picked):
            x = 4 + j * 40
            y = rng.randint(4, 60)
            w = 36
            h = rng.randint(24, 60)
            color = tuple(rng.randint(40, 200) for _ in range(3))
            draw.rectangle([x, y, x + w - 1, y + h - 1], fill=color)
            objects.append({"id": f"o{j + 1}", "bbox": [x, y, w, h], "role": role})
        image_id = f"syn{i + 1:02d}"
        img.save(ROOT / "images" / f"{image_id}.png", optimize=False)
        images.append({"id": image_id, "path": f"images/{image_id}.png", "event": event,
                       "objects": objects})
    doc = {"images": images}
    (ROOT / "dataset.json").write_text(json.dumps(doc, indent=2) + "\n")


if __name__ == "__main__":
    main()
