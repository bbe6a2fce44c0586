"""Regenerate the bundled open lexicon files under src/teamviability/data/lexicons."""

from pathlib import Path
import sys

OUT = Path(__file__).resolve().parents[1] / "src" / "teamviability" / "data" / "lexicons"

CATEGORIES = {
    "anger": """anger* angry annoy* argh arrogan* attack* bitter* blam* bother* cruel* cuss*
        damn* disgust* dumb* enemy* fight* fury furious hate hated hateful hates hating hatred
        hostil* idiot* insult* irritat* jerk* kill* mad maddening madder maddest rage* ridicul*
        rude* shit* shut stupid* suck* temper threat* ugh ugly* vicious* violen* wtf""",
    "anxiety": """afraid alarm* anxi* apprehens* awkward* confus* desperat* distraught distress*
        doubt* dread* embarrass* fear* fearful* frantic* fright* guilt* hesita* horror* insecur*
        irrational* jitter* nervous* obsess* overwhelm* panic* pressur* restless* risk* scare*
        scary shaky shame* shy* struggl* stress* tense* terrified terror* uncomfortabl* uneas*
        unsure upset* vulnerab* worr*""",
    "sadness": """alone broke cried cries crushed cry crying depress* despair* devastat* disappoint*
        discourag* dishearten* doom* dull* empty gloom* grief griev* grim* heartbr* helpless*
        homesick* hopeless* hurt* lame* lonel* lose loser* loses losing loss* lost melanchol*
        miser* mourn* neglect* pathetic* pity* regret* sad sadde* sadly sadness sob sobbed sobbing
        sorrow* suffer* tears tragedy tragic* unhapp* unfortunate* unwanted weep* wept""",
    "articles": "a an the",
    "conjunctions": """also although and as because but cos cuz either hence how however if
        neither nor once or plus since so than that then though thus till unless until when
        whenever where whereas wherever whether while yet""",
    "prepositions": """about above across after against along amid among around as at before
        behind below beneath beside besides between beyond by despite down during except for from
        in inside into like near of off on onto out outside over past per since through throughout
        till to toward towards under underneath unlike until up upon via with within without""",
    "inclusive": """add adding adds along and both close* join* include* included includes
        including inclusive* plus together we with""",
    "exclusive": """although but either except exclu* however instead neither nor or rather
        unless versus vs whether without""",
    "quantifiers": """all another any bit both couple dozen each enough entire* every everything
        few half lot lots many more most much multiple none numerous part partly percent* plenty
        several some something tons whole""",
    "certainty": """absolute* always certain* clear clearly completely confident* definite*
        definitely fact forever fundamental* guarantee* indeed inevitab* infallib* must never
        obvious* perfect* positive* precis* pure* sure surely total totally true truly truth*
        undeniab* undoubt* unquestion*""",
    "discrepancies": """besides could couldn't couldnt hope hoped hopeful* hopes hoping ideal*
        if lack* mistak* must mustn't need needed needing needs normal ought should shouldn't
        shouldnt undo* want wanted wanting wants wish wished wishes wishing would wouldn't wouldnt""",
    "negation": """ain't aint aren't arent can't cannot cant didn't didnt doesn't doesnt don't
        dont hadn't hadnt hasn't hasnt haven't havent isn't isnt neither never no nobod* none nope
        nor not nothing nowhere shouldn't wasn't wasnt weren't werent won't wont wouldn't""",
    "tentativeness": """almost any anyhow anything anywhere apparently appear* approximat*
        barely depend* doubt* dunno fairly guess* hope* hypothe* if kinda kind likel* lot maybe
        might most perhaps possib* presumab* probabl* question* random* seem* some somehow
        something sometime* somewhat sort sorta suppos* tempora* tentativ* unclear uncertain*
        unknown* unsure vague*""",
    "first_singular": "i i'd i'll i'm i've id im ive me mine my myself",
    "first_plural": "let's lets our ours ourselves us we we'd we'll we're we've",
    "second_person": """thee thou thy u ur y'all ya yall you you'd you'll you're you've youd
        youll your youre yours yourself yourselves youve""",
    "indefinite_pronouns": """another anybody anyone anything everybody everyone everything
        it it'd it'll it's its itself nobody somebody someone something stuff that that'd that'll
        that's thats these thing* this those""",
    "adverbs": """about absolutely actually again almost already also always anyway anyways
        apparently back barely basically completely currently definitely early easily enough
        especially even ever exactly extremely finally fully generally here hopefully how
        immediately instead just kinda lately literally mainly maybe mostly much nearly never now
        often only perhaps pretty probably quickly quite rarely rather really recently seriously
        simply slowly so sometimes soon still suddenly there too totally truly usually very well
        when where why yet""",
    "social": """advice advis* ally bro bros brother* buddy* call called calling chat* colleague*
        communicat* companion* contact* conversation* cousin* dude* everybody everyone family
        friend* girl* give gives giving guy guys he her hers herself hi him himself his hello hey
        human* meet* member* mention* neighbor* partner* people person* share* she social* talk*
        team* tell* they them themselves thank* us we who you""",
}

ARGUE = """actually anyway because believe but know mean no oh really see so think though well
    yeah yes"""

# term, polarity, subjectivity
SENTIMENT = """
amazing 0.6 0.9
annoying -0.8 0.9
awesome 1.0 1.0
awful -1.0 1.0
bad -0.7 0.67
beautiful 0.85 1.0
best 1.0 0.3
better 0.5 0.5
boring -1.0 1.0
bored -0.5 0.7
brilliant 0.9 1.0
clever 0.5 0.9
cool 0.35 0.65
correct 0.0 0.0
crazy -0.6 0.9
creative 0.5 0.8
cute 0.5 1.0
difficult -0.5 1.0
disappointed -0.75 0.75
disappointing -0.6 0.7
easy 0.43 0.83
excellent 1.0 1.0
excited 0.38 0.75
exciting 0.3 0.8
fair 0.7 0.9
fantastic 0.4 0.9
fine 0.42 0.5
fun 0.3 0.2
funny 0.25 1.0
glad 0.5 1.0
good 0.7 0.6
great 0.8 0.75
happy 0.8 1.0
hard -0.29 0.54
hate -0.8 0.9
helpful 0.5 0.5
horrible -1.0 1.0
important 0.4 1.0
interesting 0.5 0.5
lame -0.5 0.75
like 0.0 0.0
lol 0.8 0.7
love 0.5 0.6
lovely 0.5 0.75
lucky 0.33 1.0
nice 0.6 1.0
perfect 1.0 1.0
poor -0.4 0.6
pretty 0.25 1.0
right 0.29 0.54
sad -0.5 1.0
sadly -0.5 1.0
silly -0.5 0.5
smart 0.21 0.64
sorry -0.5 1.0
strange 0.0 0.15
stupid -0.8 1.0
super 0.33 0.67
terrible -1.0 1.0
thanks 0.2 0.2
true 0.35 0.65
ugly -0.7 1.0
unfortunate -0.5 1.0
unfortunately -0.5 1.0
unhappy -0.6 0.9
upset -0.4 0.7
useful 0.3 0.0
useless -0.5 0.2
weird -0.5 1.0
wonderful 1.0 1.0
worse -0.4 0.6
worst -1.0 1.0
wrong -0.5 0.9
yay 0.6 0.8
"""


def write(name: str, body: str, header: str = "") -> None:
    (OUT / f"{name}.txt").write_text(f"#name: {name}\n{header}" + body, encoding="utf-8")


def main(easy_words_path: str) -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    note = "# open approximation of this word-choice category; replace freely\n"
    for name, words in CATEGORIES.items():
        entries = sorted(set(words.split()))
        write(name, "\n".join(entries) + "\n", note)
    argue = sorted(set(ARGUE.split()))
    assert len(argue) == 17, len(argue)
    write(
        "argue",
        "\n".join(argue) + "\n",
        "# 17 single-token disagreement discourse markers (stand-in list)\n",
    )
    rows = []
    for line in SENTIMENT.strip().splitlines():
        term, pol, subj = line.split()
        rows.append(f"{term}\t{pol}\t{subj}")
    write("sentiment", "\n".join(rows) + "\n", "#type: sentiment\n# term<TAB>polarity<TAB>subjectivity\n")
    easy = []
    for w in Path(easy_words_path).read_text(encoding="utf-8").split():
        w = w.strip().lower().rstrip(".")
        if w and "-" not in w and w not in easy:
            easy.append(w)
    write(
        "easy_words",
        "\n".join(sorted(easy)) + "\n",
        "# Dale-Chall familiar words, from the textstat package (MIT License,\n"
        "# Copyright (c) 2016 Shivam Bansal). Hyphenated entries dropped.\n",
    )


if __name__ == "__main__":
    main(sys.argv[1])
