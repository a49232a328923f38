"""Writes fixtures.json: three fixture cases and the exact prompt text every
template must render for each of them.

The prompt wording below is typed out in full, independently of templates/,
so a drift in either copy shows up as a golden mismatch.
"""
import json
from pathlib import Path

HERE = Path(__file__).resolve().parent

CASES = [
    {
        "name": "arrest",
        "event": {
            "name": "Justice.ArrestJail",
            "definition": "[Agent] arrested or jailed [Person] using [Instrument] at place",
            "roles": [
                {"name": "Agent", "definition": "the jailer or arresting agent"},
                {"name": "Person", "definition": "the person who is jailed or arrested"},
                {"name": "Instrument", "definition": "the instrument used to arrest or jail"},
            ],
        },
        "image": {"id": "img-a", "path": "/data/a.jpg"},
        "object": {"id": "o2", "bbox": [10, 20, 30, 40]},
        "caption": "Two police officers lead a handcuffed man toward a van.",
        "descriptions": [
            "A police officer holding the man's arm, acting as the arresting agent.",
            "A man in handcuffs being detained.",
        ],
        "exemplars": [
            {
                "caption": "Soldiers fire at a building from behind a wall.",
                "event": "Conflict.Attack",
                "event_definition": "[Attacker] attacked or assaulted [Target] [Instrument] at place",
                "roles": [["Attacker", "the attacking agent"], ["Target", "the target of the attack"],
                          ["Instrument", "the instrument used in the attack"]],
                "descriptions": ["A soldier aiming a rifle.", "A damaged building."],
                "gold": ["Attacker", "Target"],
            },
            {
                "caption": "A man hands an envelope of cash to a woman.",
                "event": "Transaction.TransferMoney",
                "event_definition": "[Giver] gave [Money] to [Recipient]",
                "roles": [["Giver", "the donating agent"], ["Recipient", "the recipient agent"],
                          ["Money", "the money given"]],
                "descriptions": ["A man holding out an envelope.", "A woman reaching out.",
                                 "An envelope full of banknotes."],
                "gold": ["Giver", "Recipient", "Money"],
            },
            {
                "caption": "Protesters with banners face a line of riot police.",
                "event": "Conflict.Demonstrate",
                "event_definition": "",
                "roles": [["Demonstrator", ""], ["Instrument", ""], ["Police", ""]],
                "descriptions": ["A protester shouting.", "A riot officer with a shield."],
                "gold": ["Demonstrator", "Police"],
            },
        ],
    },
    {
        "name": "dialing",
        "event": {
            "name": "dialing",
            "definition": "",
            "roles": [{"name": "agent", "definition": ""}, {"name": "tool", "definition": ""},
                      {"name": "phone", "definition": ""}],
        },
        "image": {"id": "dialing_17", "path": "images/dialing_17.jpg"},
        "object": {"id": "tool", "bbox": [0, 0, 12.5, 7.25]},
        "caption": "A  finger presses\nbuttons on a   desk phone.",
        "descriptions": ["A hand pressing a key.", "An office telephone.", "A desk."],
        "exemplars": [
            {
                "caption": "A woman writes on a whiteboard.",
                "event": "writing",
                "event_definition": "AGENT writes on SURFACE with TOOL",
                "roles": [["agent", "the one writing"], ["surface", ""], ["tool", "the writing implement"]],
                "descriptions": ["A woman holding a marker.", "A whiteboard.", "A blue marker."],
                "gold": ["agent", "surface", "tool"],
            },
            {
                "caption": "A chef slices onions on a cutting board.",
                "event": "slicing",
                "event_definition": "",
                "roles": [["agent", ""], ["item", ""], ["tool", ""]],
                "descriptions": ["A chef holding a knife.", "A chopped onion."],
                "gold": ["agent", "item"],
            },
            {
                "caption": "A boy kicks a   ball\tacross a field.",
                "event": "kicking",
                "event_definition": "AGENT kicks ITEM",
                "roles": [["agent", "the one kicking"], ["item", "the thing kicked"]],
                "descriptions": ["A boy mid-kick.", "A soccer ball in the air."],
                "gold": ["agent", "item"],
            },
        ],
    },
    {
        "name": "transport",
        "event": {
            "name": "Movement.Transport",
            "definition": "[Agent] transported [Artifact or Person] in [Instrument] from [Origin] to [Destination]",
            "roles": [
                {"name": "Agent", "definition": "the agent responsible for the transport"},
                {"name": "Artifact", "definition": "the person or thing being transported"},
                {"name": "Instrument", "definition": "the vehicle used to transport"},
                {"name": "Destination", "definition": ""},
            ],
        },
        "image": {"id": "img-t", "path": "/srv/m2e2/img-t.jpg"},
        "object": {"id": "o1", "bbox": [100, 5, 64, 48]},
        "caption": "Refugees climb onto the back of a truck at a border crossing.",
        "descriptions": ["A truck carrying people across the border."],
        "exemplars": [
            {
                "caption": "Mourners gather around a coffin.",
                "event": "Life.Die",
                "event_definition": "[Victim] died at place, or was killed by [Agent] using [Instrument]",
                "roles": [["Victim", "the person who died"], ["Agent", "the killer"],
                          ["Instrument", "the device used to kill"]],
                "descriptions": ["A coffin draped in a flag."],
                "gold": ["Victim"],
            },
        ],
    },
]

# Event list shown by the event detection prompt.
DETECTION_EVENTS = [
    ("Life.Die", "[Victim] died at place, or was killed by [Agent] using [Instrument]"),
    ("Justice.ArrestJail", "[Agent] arrested or jailed [Person] using [Instrument] at place"),
    ("dialing", ""),
]

LLM_PREAMBLE = (
    "You are a helpful AI assistant with extensive knowledge of event argument extraction. "
    "Worldwide events are documented in raw text on various online platforms, and it is crucial "
    "to extract useful and concise information about them for downstream applications.\n"
    "\n"
    "In this case, you will be provided with an “Event Image Description”, the "
    "“Event” portrayed in the image, a generic “Event Argument Roles "
    "Definition” that helps you to understand the argument roles that are grounded in "
    "different objects in the image, and the “Object Role” descriptions to describe "
    "the role of specific objects in the context of the \"Event Image\". Based on the provided "
    "information, you need to tell the argument roles associated with different objects in the "
    "image.\n"
    "\n"
    "Remember that:\n"
    "1) The number of possible event argument roles can sometimes be equal to, more, or less "
    "than the number of objects detected for the \"Event Image\".\n"
    "2) Multiple objects may get identical event argument roles, but not always.\n"
    "3) It is completely possible that some of the event argument roles are not grounded in any "
    "of the objects detected for the \"Event Image\".\n"
    "\n"
    "Please keep your answer concise. You can choose to assign a \"Other\" argument role if you "
    "are not sure about the argument role for a particular object."
)


def squash(s):
    return " ".join(s.split())


def role_block(definition, roles):
    lines = [squash(definition)] if squash(definition) else []
    for name, d in roles:
        lines.append(f"- {name}: {squash(d)}" if squash(d) else f"- {name}")
    return "\n".join(lines)


def case_roles(case):
    return [(r["name"], r["definition"]) for r in case["event"]["roles"]]


def case_block(case):
    return role_block(case["event"]["definition"], case_roles(case))


def object_lines(descriptions):
    return "\n".join(f"Role of Object {i}: {squash(d)}" for i, d in enumerate(descriptions, 1))


def query_block(case, descriptions):
    stubs = "\n".join(f"Argument Role of Object {i}:" for i in range(1, len(descriptions) + 1))
    return (
        f"Event Image Description: {squash(case['caption'])}\n\n"
        f"Event: {case['event']['name']}\n\n"
        f"Event Argument Role Definition:\n{case_block(case)}\n\n"
        f"{object_lines(descriptions)}\n\n"
        f"{stubs}"
    )


def solved(ex):
    answers = "\n".join(f"Argument Role of Object {i}: {r}" for i, r in enumerate(ex["gold"], 1))
    return (
        "Solved Instance:\n\n"
        f"Event Image Description: {squash(ex['caption'])}\n\n"
        f"Event: {ex['event']}\n\n"
        f"Event Argument Role Description:\n{role_block(ex['event_definition'], ex['roles'])}\n\n"
        f"{object_lines(ex['descriptions'])}\n\n"
        f"{answers}"
    )


def few_shot(case, exemplars):
    if len(exemplars) == 1:
        intro = ("We will first show a single solved instance of the task, and then you will "
                 "complete the task on a new query.")
    else:
        intro = (f"We will first show {len(exemplars)} solved instances of the task, and then "
                 "you will complete the task on a new query.")
    blocks = "\n\n".join(solved(ex) for ex in exemplars)
    return (f"{LLM_PREAMBLE}\n\n{intro}\n\n{blocks}\n\nQuery Instance:\n\n"
            f"{query_block(case, case['descriptions'])}")


def render(case):
    ev = case["event"]["name"]
    block = case_block(case)
    image = {"image_ref": case["image"]["path"], "crop": None}
    crop = {"image_ref": case["image"]["path"], "crop": case["object"]["bbox"]}
    out = {}
    out["gvlm_description_full"] = {
        "images": [image, crop],
        "text": (
            "Image 1: {{image:1}}\nImage 2: {{image:2}}\n"
            f"Describe the role of the entity in ``Image 2'' in the context of the {ev} event in "
            f"``Image 1''. The possible argument roles of the objects performing {ev} event "
            f"include:\n{block}\nPlease be concise with your answer."
        ),
    }
    out["gvlm_description_no_event_image"] = {
        "images": [crop],
        "text": (
            "Image: {{image:1}}\n\n"
            f"Describe the role of the entity in ``Image'' in the context of the {ev} event. "
            f"The possible argument roles of the objects performing {ev} event include:\n"
            f"{block}\nPlease be concise with your answer."
        ),
    }
    out["gvlm_object_caption"] = {
        "images": [crop],
        "text": "Image: {{image:1}}\n\nDescribe the ``Image'' concisely.",
    }
    out["image_caption"] = {
        "images": [image],
        "text": "Image: {{image:1}}\n\nDescribe this image in detail.",
    }
    out["gvlm_direct_earl"] = {
        "images": [image, crop],
        "text": (
            "Image 1: {{image:1}}\nImage 2: {{image:2}}\n"
            f"What is the role of the entity in the \"Image 2\" in the context of the {ev} event "
            f"in the \"Image 1\"? The possible argument roles of the objects in the {ev} event "
            f"include:\n{block}\n- Other\nChoose only one of these options."
        ),
    }
    out["llm_zero_shot"] = {
        "text": f"{LLM_PREAMBLE}\n\n{query_block(case, case['descriptions'])}",
        "expected_object_count": len(case["descriptions"]),
    }
    if case["exemplars"]:
        out["llm_one_shot"] = {
            "text": few_shot(case, case["exemplars"][:1]),
            "expected_object_count": len(case["descriptions"]),
        }
    if len(case["exemplars"]) >= 3:
        out["llm_three_shot"] = {
            "text": few_shot(case, case["exemplars"][:3]),
            "expected_object_count": len(case["descriptions"]),
        }
    out["alpaca"] = {
        "text": (
            "Given an “Event Image Description”, the “Event” portrayed in "
            "the image, a generic “Event Argument Roles Definition” that helps you to "
            "understand the argument roles that are grounded in different objects in the image, "
            "and the “Object Role” description to describe the role of the object in "
            "the context of the \"Event Image\". Based on the provided information, you need to "
            "tell the argument roles associated with different objects in the image. You can "
            "choose to assign an \"Other\" argument role if you are not sure about the argument "
            "role for a particular object.\n\n"
            f"Event Image Description: {squash(case['caption'])}\n\n"
            f"Event: {ev}\n\n"
            f"Event Argument Role Definition:\n{block}\n\n"
            f"Role of Object: {squash(case['descriptions'][0])}\n\n"
            "Argument Role of Object:"
        ),
        "expected_object_count": 1,
    }
    out["similarity_role"] = {
        "texts": [f"An object playing {r} role in the {ev} event." for r, _ in case_roles(case)],
    }
    out["similarity_event"] = {"text": f"An image depicting the {ev} event."}
    events = "\n".join(f"- {n}: {d}" if d else f"- {n}" for n, d in DETECTION_EVENTS)
    out["event_detection"] = {
        "text": (
            "You are a helpful AI assistant with extensive knowledge of event extraction. You "
            "will be provided with an “Event Image Description” generated for an image "
            "and the list of possible “Event Types” (with their definitions when "
            "available). Based on the provided information, you need to tell the event type "
            "depicted in the image. Choose only one of the listed event types.\n\n"
            f"Event Image Description: {squash(case['caption'])}\n\n"
            f"Event Types:\n{events}\n\n"
            "Event Type:"
        ),
    }
    return out


def main():
    doc = {
        "detection_events": [{"name": n, "definition": d} for n, d in DETECTION_EVENTS],
        "cases": [{**case, "expected": render(case)} for case in CASES],
    }
    (HERE / "fixtures.json").write_text(json.dumps(doc, indent=2, ensure_ascii=False) + "\n")


if __name__ == "__main__":
    main()
