#!/usr/bin/env python3
"""Writes the bundled 500-post mini corpus (submissions + comments archives).

Deterministic for a given --seed; rerunning with the defaults reproduces the
committed files byte for byte.
"""

import argparse
import json
import random
from pathlib import Path

# (title, body sentences, reply kind)
EVENTS = [
    ("I got a promotion at work today", ["My boss called me into her office this morning.", "I have been working toward this for three years."], "congrats"),
    ("I finally finished paying off my student loans", ["It took me eight long years.", "I am debt free now and I can breathe again."], "congrats"),
    ("My dog passed away last night", ["He was fourteen years old.", "The house feels so empty without him."], "sorry"),
    ("I passed my driving test on the third try", ["The examiner was really strict.", "I almost cried when she told me."], "congrats"),
    ("My grandmother is in the hospital again", ["The doctors are running more tests.", "I am scared of what they will find."], "support"),
    ("I am starting a new job today", ["I barely slept last night.", "I hope my new coworkers are nice."], "luck"),
    ("My best friend moved across the country", ["We have been friends since kindergarten.", "I do not know who I will talk to now."], "support"),
    ("I ran my first marathon this weekend", ["My legs still hurt.", "I finished in under five hours."], "congrats"),
    ("I failed my final exam", ["I studied for weeks.", "I feel like such a failure right now."], "support"),
    ("We are having a baby in the spring", ["We found out last week.", "I still cannot believe it."], "congrats"),
    ("My car broke down on the highway", ["I waited two hours for the tow truck.", "The repair will cost more than the car is worth."], "sorry"),
    ("I cooked dinner for my family for the first time", ["I made lasagna from scratch.", "Everyone asked for seconds."], "congrats"),
    ("My neighbor keeps parking in my spot", ["I have asked him nicely three times.", "It makes me so angry every morning."], "advice"),
    ("I got rejected from my dream school", ["I checked the portal this morning.", "All my friends got in."], "sorry"),
    ("I adopted a kitten from the shelter", ["She is tiny and gray.", "She already sleeps on my pillow."], "congrats"),
    ("I have a job interview tomorrow", ["It is for a position I really want.", "I keep practicing my answers in the mirror."], "luck"),
    ("My sister stopped talking to me", ["We had a fight at thanksgiving.", "I miss her every day."], "advice"),
    ("I found my old childhood diary", ["I read it all in one night.", "I laughed and cried at the same time."], "question"),
    ("I lost my wallet on the train", ["It had all my cards in it.", "Nobody has turned it in yet."], "sorry"),
    ("I quit smoking one year ago today", ["The first month was the hardest.", "I feel healthier than ever."], "congrats"),
    ("My landlord raised the rent again", ["It went up by two hundred dollars.", "I do not know if I can afford to stay."], "advice"),
    ("I gave a speech at my brother's wedding", ["I was shaking the whole time.", "People said it was the best speech of the night."], "congrats"),
    ("I feel lonely since I moved to this city", ["I do not know anyone here.", "Weekends are the worst."], "support"),
    ("My son said his first word today", ["He said dog instead of mom.", "My wife is still a little jealous."], "congrats"),
    ("I broke my arm skateboarding", ["I will be in a cast for six weeks.", "I cannot even tie my shoes."], "sorry"),
    ("I am nervous about my surgery next week", ["It is a routine procedure.", "I still cannot stop thinking about it."], "luck"),
    ("I got my first paycheck today", ["It was not much.", "I bought my mom flowers with it."], "congrats"),
    ("My team lost the championship game", ["We were ahead until the last minute.", "The bus ride home was silent."], "sorry"),
    ("I planted a vegetable garden this spring", ["The tomatoes are finally growing.", "I check on them every morning."], "question"),
    ("I saw my father cry for the first time", ["It was at my grandfather's funeral.", "I did not know what to say to him."], "support"),
    ("I finally told my parents I am changing majors", ["They took it better than I expected.", "My dad even hugged me."], "congrats"),
    ("My coworker took credit for my project", ["The manager praised him in the meeting.", "I stayed quiet and I regret it."], "advice"),
    ("I beat my personal record at the gym", ["I lifted one hundred kilos.", "Six months ago I could barely lift half of that."], "congrats"),
    ("I accidentally sent a text to the wrong person", ["It was about my boss.", "I sent it to my boss."], "question"),
    ("My house flooded during the storm", ["We lost most of our furniture.", "The insurance company is not answering."], "sorry"),
    ("I won a small art contest", ["It was my first time entering.", "The prize was a gift card and a ribbon."], "congrats"),
    ("I am moving back home with my parents", ["I lost my apartment last month.", "I feel embarrassed telling people."], "support"),
    ("I reconnected with an old friend from high school", ["We talked for four hours.", "It felt like no time had passed."], "question"),
    ("I got a scholarship for next year", ["It covers half of my tuition.", "My mom screamed when I told her."], "congrats"),
    ("My flight was cancelled on my birthday", ["I was supposed to see my family.", "I spent the night at the airport."], "sorry"),
]

# Nominal titles whose body carries the verbal sentence.
NOMINAL = [
    ("My new job", "I am starting a new job today."),
    ("Best day ever", "I finally got the keys to my first apartment."),
    ("Big news", "We are having a baby in the spring."),
    ("Rough week", "My car broke down on the highway."),
    ("Small victory", "I quit smoking one year ago today."),
]

REPLIES = {
    "congrats": ["Congratulations, you earned it!", "Congrats! That is amazing news.", "That is awesome, well done!",
                 "I am so happy for you!", "You should be proud of yourself.", "Wow, that is incredible!"],
    "sorry": ["I am so sorry to hear that.", "That sucks, I am sorry.", "Sorry for your loss.",
              "That must be really hard.", "Hang in there, better days are coming.", "Hugs, I am sorry you are going through this."],
    "support": ["You are not alone in this.", "Hang in there, it will get better.", "I understand how you feel.",
                "I am here if you need to talk.", "That must be really hard for you.", "Sending you hugs."],
    "luck": ["Good luck, you got this!", "Best of luck tomorrow!", "You will do great, do not worry.",
             "Good luck! Let us know how it goes.", "I hope everything goes well for you.", "Wishing you the best!"],
    "advice": ["You should talk to him directly.", "Maybe try writing a letter first.", "I would suggest calling someone you trust.",
               "Have you tried talking to them about it?", "You should stand up for yourself next time.", "Try to take it one day at a time."],
    "question": ["What happened next?", "How did that make you feel?", "Why did you decide to do that?",
                 "Did you tell anyone about it?", "That sounds fun, what did you do?", "How long did it take?"],
}

OPENERS = ["", "", "", "So ", "Well, ", "Guys, ", "Update: ", "Today "]
ENDINGS = ["", ".", "!", "!!", " :)", "..."]
REPLY_NOISE = ["", "", "", " :)", "!", " Seriously."]

SOURCES = ["CasualConversation", "offmychest", "happy", "self"]
RESERVED_SOURCE = "TrueOffMyChest"

# Noise records exercising each discard rule.
NOISE_BODIES = ["[deleted]", "[removed]", "check this out https://example.com/page", "see r/happy for more",
                "ask u/helper about it", "12345 !!! 67890 ok", "lol", "www.example.org has the answer",
                "this is reddit gold material", "&gt;&gt; quoted (edited) text here"]

BASE_TIME = 1577836800  # 2020-01-01


def make_title(rng, title):
    t = rng.choice(OPENERS) + title + rng.choice(ENDINGS)
    if rng.random() < 0.15:
        t = t.lower()
    if rng.random() < 0.05:
        t += " (long post)"
    if rng.random() < 0.05:
        t = t.replace("and", "&amp;")
    return t


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "data" / "mini_corpus"))
    ap.add_argument("--seed", type=int, default=20231)
    ap.add_argument("--posts", type=int, default=500)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    subs, comments = [], []
    comment_no = 0
    for i in range(args.posts):
        sid = f"m{i:05d}"
        ts = BASE_TIME + i * 3600 + rng.randrange(600)
        roll = rng.random()
        kind = None
        if roll < 0.08:
            title, body = rng.choice(NOMINAL)
            kind = rng.choice(list(REPLIES))
        elif roll < 0.13:
            title, body = rng.choice(NOISE_BODIES), rng.choice(["", rng.choice(NOISE_BODIES)])
            kind = "question"
        else:
            ev_title, sentences, kind = rng.choice(EVENTS)
            title = make_title(rng, ev_title)
            body = " ".join(sentences[: rng.randrange(0, len(sentences) + 1)])
        source = RESERVED_SOURCE if i % 50 == 7 else rng.choice(SOURCES)
        rec = {"id": sid, "title": title, "selftext": body, "created_utc": ts if rng.random() < 0.8 else str(ts),
               "source": source}
        subs.append(rec)
        for _ in range(rng.choice([0, 1, 2, 2, 3, 3, 4, 5])):
            comment_no += 1
            cid = f"c{comment_no:06d}"
            if rng.random() < 0.08:
                text = rng.choice(NOISE_BODIES)
            else:
                text = rng.choice(REPLIES[kind]) + rng.choice(REPLY_NOISE)
                if rng.random() < 0.1:
                    text = text + " " + rng.choice(REPLIES[kind])
            parent = f"t3_{sid}"
            if rng.random() < 0.05 and comments:
                parent = "t1_" + comments[-1]["id"]  # reply to a reply; not a direct pair
            comments.append({"id": cid, "parent_id": parent, "link_id": f"t3_{sid}", "body": text,
                             "created_utc": ts + rng.randrange(60, 7200)})

    # A re-crawled duplicate, a record outside the window and malformed lines.
    dup = dict(subs[3])
    dup["title"] = dup["title"] + " (edited)"
    extra_subs = [dup, {"id": "m99999", "title": "I moved to a new city last year", "selftext": "",
                        "created_utc": BASE_TIME - 86400 * 400, "source": "self"}]
    with open(out / "submissions.jsonl", "w", encoding="utf-8", newline="\n") as f:
        for rec in subs + extra_subs:
            f.write(json.dumps(rec, sort_keys=True) + "\n")
        f.write("{not json at all\n")
        f.write(json.dumps({"title": "record without an id", "created_utc": BASE_TIME}) + "\n")
    with open(out / "comments.jsonl", "w", encoding="utf-8", newline="\n") as f:
        for rec in comments:
            f.write(json.dumps(rec, sort_keys=True) + "\n")
        f.write(json.dumps({"id": "orphan1", "parent_id": "t3_nope", "link_id": "t3_nope", "body": "Nobody sees this reply.",
                            "created_utc": BASE_TIME + 100}) + "\n")
        f.write("[1, 2, 3]\n")


if __name__ == "__main__":
    main()
