#!/usr/bin/env python3
"""Writes the 200-article toy corpus (tests/fixtures/toy_corpus.jsonl).

Eight topics, 25 articles each. Every topic has its own vocabulary so the
articles cluster, and its sentences mention that topic's group keywords.
"""
import json
import pathlib
import random

TOPICS = {
    "age": {
        "tags": ["community", "health"],
        "titles": ["Kaumātua honoured at {place} marae", "Rangatahi lead {place} clean-up", "Pensioners rally over bus fares"],
        "lines": [
            "The elderly residents of {place} gathered at the marae for a hui about housing.",
            "A young volunteer said the rangatahi programme had changed her whānau.",
            "Many pensioner groups say the retirement village fees are rising.",
            "The kaumātua opened the hui with a karakia before the kai.",
            "Local youth workers met teenager groups at the community hall.",
            "Old and young residents shared stories about the retirement village.",
            "The retiree club in {place} runs a weekly walking group for seniors.",
            "Rangatahi and kaumātua planted trees along the river in {place}.",
        ],
    },
    "gender": {
        "tags": ["whānau", "society"],
        "titles": ["Karani raises mokopuna in {place}", "Mothers group marks ten years", "Fathers share parenting stories"],
        "lines": [
            "Her karani raised four mokopuna in a small house in {place}.",
            "The woman said her mother taught her to weave flax kete.",
            "A father of three said men often avoid asking for parenting help.",
            "The wāhine of the netball club cooked kai for the whole whānau.",
            "Tāne from the village carved a new waka for the festival.",
            "The girl and her brother walked to school with their koro.",
            "A boy from {place} won the kapa haka speech competition.",
            "Women in the parenting group said their karani looked after the children.",
        ],
    },
    "race_ethnicity": {
        "tags": ["culture", "history"],
        "titles": ["Māori and Pākehā histories taught in {place}", "Pasifika festival fills {place} park", "Indigenous art wins award"],
        "lines": [
            "Māori students in {place} learned about their whakapapa and iwi.",
            "The Pākehā settlers arrived in {place} in the nineteenth century.",
            "A Pasifika choir sang at the opening of the cultural centre.",
            "Asian business owners in {place} sponsored the lantern festival.",
            "The European museum curator returned the taonga to the hapū.",
            "Indigenous artists from the hapū painted the new mural.",
            "Polynesian navigation stories were shared with visitors to the museum.",
            "The iwi and the museum signed an agreement about the taonga.",
        ],
    },
    "sexual_orientation": {
        "tags": ["rainbow", "community"],
        "titles": ["Pride parade returns to {place}", "Takatāpui support network grows", "Rainbow youth centre opens"],
        "lines": [
            "The gay couple said the pride parade in {place} felt welcoming.",
            "A lesbian rugby team marched at the front of the pride parade.",
            "Takatāpui rangatahi found support at the rainbow youth centre.",
            "Bisexual and queer volunteers staffed the rainbow helpline.",
            "A straight ally spoke about the pride march at the rainbow centre.",
            "The rainbow network said heterosexual allies joined the parade.",
            "Queer artists painted a rainbow crossing in {place}.",
            "The pride committee thanked the takatāpui volunteers.",
        ],
    },
    "physical_appearance": {
        "tags": ["health", "fashion"],
        "titles": ["Tattoo artists celebrate tā moko", "Fashion week features every body", "Basketball team recruits tall players"],
        "lines": [
            "The tattooed artist said tā moko tells the story of whakapapa.",
            "A tall basketball player from {place} signed with the national league.",
            "Short players on the team said speed matters more than height.",
            "The fashion show in {place} featured thin and overweight models.",
            "Skinny jeans were replaced by wide trousers at the fashion week.",
            "A fat activist spoke about body image at the fashion show.",
            "The tattoo studio in {place} trains apprentices in tā moko.",
            "The basketball coach said tall and short players train together.",
        ],
    },
    "disability": {
        "tags": ["health", "access"],
        "titles": ["Wheelchair access improved in {place}", "Deaf students celebrate sign language week", "Blind runner finishes marathon"],
        "lines": [
            "A disabled resident of {place} said the new ramps changed her daily life.",
            "The blind runner finished the marathon with a guide runner.",
            "Deaf students performed a waiata in sign language.",
            "The wheelchair basketball team trains at the {place} stadium.",
            "An autistic artist opened an exhibition at the library.",
            "The hāua community group asked the council for accessible footpaths.",
            "Hearing impaired visitors used captions at the museum.",
            "The council installed wheelchair ramps at the library and stadium.",
        ],
    },
    "nationality": {
        "tags": ["migration", "economy"],
        "titles": ["Chinese New Year celebrated in {place}", "Samoan church opens new hall", "Australian tourists return"],
        "lines": [
            "Chinese families in {place} celebrated the new year with dumplings.",
            "An Indian restaurant owner said the migrant community is growing.",
            "Australian tourists returned to the ski fields near {place}.",
            "The American company opened a factory at the port.",
            "British backpackers worked in the orchards during the harvest.",
            "The Samoan church choir sang at the opening of the new hall.",
            "Tongan and Fijian rugby fans filled the stadium in {place}.",
            "Migrant workers from the Fijian community picked fruit in the orchards.",
        ],
    },
    "religion": {
        "tags": ["faith", "community"],
        "titles": ["Interfaith service held in {place}", "Mosque opens doors to neighbours", "Ringatū hui draws hundreds"],
        "lines": [
            "The Christian minister and the Muslim imam led an interfaith service.",
            "A Hindu temple in {place} hosted the Diwali festival.",
            "Jewish families lit candles at the synagogue for Hanukkah.",
            "The Buddhist monastery offered meditation classes to the public.",
            "The Catholic cathedral in {place} held a mass for the victims.",
            "An atheist group debated the church leaders at the university.",
            "Ringatū followers gathered at the marae for the annual hui.",
            "The mosque in {place} opened its doors to neighbours for a shared meal.",
        ],
    },
}

PLACES = ["Rotorua", "Gisborne", "Whanganui", "Tauranga", "Hamilton", "Napier", "Kaitaia", "Whakatāne"]
EXTRAS = [
    "Dr. Smith said the event would continue next year.",
    "The mayor thanked everyone at 3 p.m. on Sunday.",
    "Organisers said more than two hundred people attended.",
]


def main():
    rng = random.Random(7)
    out = pathlib.Path(__file__).resolve().parent.parent / "fixtures" / "toy_corpus.jsonl"
    records = []
    n = 0
    for topic, spec in TOPICS.items():
        for i in range(25):
            n += 1
            place = rng.choice(PLACES)
            lines = rng.sample(spec["lines"], 5)
            if rng.random() < 0.5:
                lines.insert(rng.randrange(len(lines) + 1), rng.choice(EXTRAS))
            body = " ".join(l.format(place=place) for l in lines)
            records.append({
                "id": f"toy-{n:03d}",
                "source": "oral" if i % 10 == 9 else "text",
                "title": rng.choice(spec["titles"]).format(place=place),
                "body": body,
                "tags": spec["tags"],
            })
    rng.shuffle(records)
    out.write_text("".join(json.dumps(r, ensure_ascii=False) + "\n" for r in records), encoding="utf-8")
    print(len(records), "articles ->", out)


if __name__ == "__main__":
    main()
