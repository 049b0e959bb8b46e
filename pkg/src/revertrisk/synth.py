"""Synthetic multilingual revision histories with a known vandalism signal.

Each page starts with a creation revision and then receives edits from bots,
registered and anonymous users. A share of edits is vandalism; anonymous
vandalism is ``anon_ratio`` times as likely as registered vandalism. Most bad
edits carry per-language vandal vocabulary; the rest are plain-word inserts
drawn from the same distribution as good inserts (text cannot separate those)
or keyboard mash. A smaller share deletes a sentence, which text alone cannot
tell from a good deletion. Every bad edit is reverted by the next revision, and
a fraction of them turn into short edit wars.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path

import numpy as np

from .records import RevisionRecord, UserKind, byte_length, write_corpus

_BASE = {
    "enwiki": (
        "river city history music school science village castle bridge market county station church island "
        "mountain garden library museum theatre company railway harbour valley forest lake region century "
        "population economy culture language army council festival university airport stadium province "
        "built founded located known named major small large early modern northern southern western eastern "
        "famous local public royal national ancient several many important first second third main new old "
        "the a of in and with by from for was is has became served remained"
    ),
    "dewiki": (
        "fluss stadt geschichte musik schule wissenschaft dorf burg brücke markt kreis bahnhof kirche insel "
        "berg garten bibliothek museum theater firma eisenbahn hafen tal wald see region jahrhundert "
        "bevölkerung wirtschaft kultur sprache armee rat fest universität flughafen stadion provinz "
        "gebaut gegründet gelegen bekannt benannt groß klein früh modern nördlich südlich westlich östlich "
        "berühmt lokal öffentlich königlich national alt mehrere viele wichtig erste zweite dritte neue "
        "der die das und mit von für war ist hat wurde blieb"
    ),
    "frwiki": (
        "rivière ville histoire musique école science village château pont marché comté gare église île "
        "montagne jardin bibliothèque musée théâtre société chemin port vallée forêt lac région siècle "
        "population économie culture langue armée conseil festival université aéroport stade province "
        "construit fondé situé connu nommé grand petit ancien moderne nord sud ouest est célèbre local "
        "public royal national plusieurs nombreux important premier deuxième troisième nouveau vieux "
        "le la les de et avec par pour était est a devint resta"
    ),
    "eswiki": (
        "río ciudad historia música escuela ciencia pueblo castillo puente mercado condado estación iglesia "
        "isla montaña jardín biblioteca museo teatro empresa ferrocarril puerto valle bosque lago región "
        "siglo población economía cultura idioma ejército consejo festival universidad aeropuerto estadio "
        "provincia construido fundado situado conocido llamado grande pequeño antiguo moderno norte sur "
        "oeste este famoso local público real nacional varios muchos importante primero segundo tercero "
        "nuevo viejo el la los de y con por para era es tiene fue quedó"
    ),
    "itwiki": (
        "fiume città storia musica scuola scienza villaggio castello ponte mercato contea stazione chiesa "
        "isola montagna giardino biblioteca museo teatro società ferrovia porto valle foresta lago regione "
        "secolo popolazione economia cultura lingua esercito consiglio festival università aeroporto stadio "
        "provincia costruito fondato situato noto chiamato grande piccolo antico moderno nord sud ovest est "
        "famoso locale pubblico reale nazionale diversi molti importante primo secondo terzo nuovo vecchio "
        "il la gli di e con da per era è ha divenne rimase"
    ),
}

_VANDAL = {
    "enwiki": "poop stupid idiot sucks lol dumb loser boring butt fart moron gay",
    "dewiki": "doof scheisse kacke blöd idiot langweilig depp trottel furz arsch loser penner",
    "frwiki": "nul débile crétin caca merde idiot ennuyeux pipi prout con nulos bouffon",
    "eswiki": "tonto estúpido idiota caca mierda aburrido feo pedo culo imbécil perdedor jaja",
    "itwiki": "stupido idiota cacca scemo noioso brutto cretino merda culo puzza sfigato ahah",
}

_TALK = {"enwiki": "Talk:", "dewiki": "Diskussion:", "frwiki": "Discussion:", "eswiki": "Discusión:", "itwiki": "Discussione:"}
_COMMENTS = ("copyedit", "expand", "fix typo", "add link", "add source", "update", "clarify", "grammar")
_MASH_KEYS = "qwertyuiopasdfghjklzxcvbnm"


@dataclass(frozen=True)
class SynthConfig:
    n_revisions: int = 50_000
    languages: tuple[str, ...] = ("dewiki", "enwiki", "eswiki", "frwiki", "itwiki")
    seed: int = 0
    anon_share: float = 0.3
    bot_share: float = 0.03
    registered_bad_rate: float = 0.1
    anon_ratio: float = 3.0
    vocab_share: float = 0.8
    mash_share: float = 0.45  # of the non-vocabulary bad edits
    blank_share: float = 0.1  # bad edits that delete a sentence instead
    edit_war_share: float = 0.03
    talk_share: float = 0.02
    test_share: float = 0.25
    revisions_per_page: int = 25
    train_start: datetime = datetime(2022, 1, 1, tzinfo=timezone.utc)
    train_end: datetime = datetime(2022, 7, 1, tzinfo=timezone.utc)
    test_end: datetime = datetime(2022, 7, 8, tzinfo=timezone.utc)

    def __post_init__(self):
        unknown = [lang for lang in self.languages if lang not in _BASE]
        if unknown:
            raise ValueError(f"no synthetic lexicon for {unknown}; available: {sorted(_BASE)}")
        if self.registered_bad_rate * self.anon_ratio >= 1.0:
            raise ValueError("anonymous bad-edit rate must stay below 1")


@dataclass
class _Page:
    wiki_db: str
    title: str
    paragraphs: list[list[str]]
    heat: float
    is_test: bool
    revisions: list[RevisionRecord] = field(default_factory=list)

    def text(self) -> str:
        return "\n\n".join(" ".join(p) for p in self.paragraphs)


class _Generator:
    def __init__(self, config: SynthConfig):
        self.c = config
        self.rng = np.random.default_rng(config.seed)
        self.words = {lang: _BASE[lang].split() for lang in config.languages}
        self.vandal = {lang: _VANDAL[lang].split() for lang in config.languages}
        self.next_rev = 1
        self.user_counter = 0

    # -- text -------------------------------------------------------------
    def word(self, lang: str) -> str:
        return self.words[lang][self.rng.integers(len(self.words[lang]))]

    def plain_sentence(self, lang: str) -> str:
        n = int(self.rng.integers(6, 14))
        words = [self.word(lang) for _ in range(n)]
        if self.rng.random() < 0.25:
            k = int(self.rng.integers(n))
            words[k] = f"[[{words[k].capitalize()}]]"
        words[0] = words[0].capitalize()
        sentence = " ".join(words) + "."
        if self.rng.random() < 0.15:
            sentence += f"<ref>{self.word(lang).capitalize()} {int(self.rng.integers(1900, 2022))}.</ref>"
        return sentence

    def vandal_sentence(self, lang: str) -> str:
        words = [self.word(lang) for _ in range(int(self.rng.integers(3, 9)))]
        for _ in range(int(self.rng.integers(1, 4))):
            words.insert(int(self.rng.integers(len(words) + 1)), self.vandal[lang][self.rng.integers(len(self.vandal[lang]))])
        words[0] = words[0].capitalize()
        return " ".join(words) + ("!!!" if self.rng.random() < 0.4 else ".")

    def mash(self) -> str:
        chunks = ["".join(self.rng.choice(list(_MASH_KEYS), int(self.rng.integers(3, 10)))) for _ in range(int(self.rng.integers(1, 4)))]
        return " ".join(chunks)

    def initial_paragraphs(self, lang: str) -> list[list[str]]:
        paras = []
        for _ in range(int(self.rng.integers(3, 6))):
            paras.append([self.plain_sentence(lang) for _ in range(int(self.rng.integers(2, 5)))])
        if self.rng.random() < 0.5:
            paras[0].insert(0, "{{Infobox " + self.word(lang) + "}}")
        return paras

    # -- edits --------------------------------------------------------------
    def _pick_sentence(self, paras):
        p = int(self.rng.integers(len(paras)))
        return p, int(self.rng.integers(len(paras[p])))

    def good_edit(self, lang: str, paras: list[list[str]]) -> list[list[str]]:
        paras = [list(p) for p in paras]
        kind = self.rng.random()
        p, s = self._pick_sentence(paras)
        if kind < 0.2:
            paras[p].insert(int(self.rng.integers(len(paras[p]) + 1)), self.plain_sentence(lang))
        elif kind < 0.55:
            words = paras[p][s].split(" ")
            plain = [i for i, w in enumerate(words) if w.isalpha()]
            if plain:
                words[plain[int(self.rng.integers(len(plain)))]] = self.word(lang)
                paras[p][s] = " ".join(words)
            else:
                paras[p].append(self.plain_sentence(lang))
        elif kind < 0.7 and sum(len(x) for x in paras) > 3:
            del paras[p][s]
            if not paras[p]:
                del paras[p]
        elif kind < 0.85:
            words = paras[p][s].split(" ")
            k = int(self.rng.integers(len(words)))
            if words[k].isalpha():
                words[k] = f"[[{words[k]}]]"
            paras[p][s] = " ".join(words)
        else:
            paras[p][s] = paras[p][s] + f"<ref>{self.word(lang).capitalize()} {int(self.rng.integers(1900, 2022))}.</ref>"
        return paras

    def bad_edit(self, lang: str, paras: list[list[str]]) -> list[list[str]]:
        paras = [list(p) for p in paras]
        p, s = self._pick_sentence(paras)
        if self.rng.random() < self.c.blank_share and sum(len(x) for x in paras) > 3:
            del paras[p][s]
            if not paras[p]:
                del paras[p]
        elif self.rng.random() < self.c.vocab_share:
            if self.rng.random() < 0.5:
                paras[p].insert(int(self.rng.integers(len(paras[p]) + 1)), self.vandal_sentence(lang))
            else:
                words = paras[p][s].split(" ")
                k = int(self.rng.integers(len(words)))
                words.insert(k, self.vandal[lang][self.rng.integers(len(self.vandal[lang]))])
                paras[p][s] = " ".join(words)
        elif self.rng.random() < self.c.mash_share:
            paras[p].insert(int(self.rng.integers(len(paras[p]) + 1)), self.mash())
        else:
            paras[p].insert(int(self.rng.integers(len(paras[p]) + 1)), self.plain_sentence(lang))
        return paras

    # -- users and metadata ------------------------------------------------------
    def user(self, exclude_bots: bool = False) -> UserKind:
        u = self.rng.random()
        if not exclude_bots and u < self.c.bot_share:
            return UserKind.BOT
        return UserKind.ANONYMOUS if self.rng.random() < self.c.anon_share else UserKind.REGISTERED

    def user_fields(self, kind: UserKind) -> tuple[str, tuple[str, ...]]:
        self.user_counter += 1
        if kind is UserKind.ANONYMOUS:
            return f"198.51.{self.user_counter // 256 % 256}.{self.user_counter % 256}", ()
        if kind is UserKind.BOT:
            return f"ExampleBot{self.user_counter % 7}", ("bot",)
        u = self.rng.random()
        groups = ("autoconfirmed", "sysop") if u < 0.05 else (("autoconfirmed",) if u < 0.9 else ())
        return f"Editor{self.user_counter}", groups

    def flags(self) -> dict:
        mobile = self.rng.random() < 0.2
        web = mobile and self.rng.random() < 0.7
        app = mobile and not web
        android = app and self.rng.random() < 0.6
        return {
            "is_mobile_edit": mobile,
            "is_mobile_web_edit": web,
            "is_visualeditor": self.rng.random() < 0.3,
            "is_wikieditor": (not mobile) and self.rng.random() < 0.6,
            "is_mobile_app_edit": app,
            "is_android_app_edit": android,
            "is_ios_app_edit": app and not android,
        }

    def record(self, page: _Page, ts: datetime, kind: UserKind, parent_text: str, text: str, comment: str) -> RevisionRecord:
        user_text, groups = self.user_fields(kind)
        parent_id = page.revisions[-1].revision_id if page.revisions else 0
        rec = RevisionRecord(
            wiki_db=page.wiki_db,
            revision_id=self.next_rev,
            revision_parent_id=parent_id,
            page_title=page.title,
            event_timestamp=ts,
            user_kind=kind,
            revision_text_bytes_diff=byte_length(text) - byte_length(parent_text),
            event_comment=comment,
            event_user_text=user_text,
            seconds_since_previous_revision=int(self.rng.exponential(86_400)),
            parent_text=parent_text,
            current_text=text,
            user_groups=groups,
            **self.flags(),
        )
        self.next_rev += 1
        page.revisions.append(rec)
        return rec

    def comment(self) -> str:
        # independent of the label so that only text and user features carry signal
        if self.rng.random() < 0.4:
            return ""
        return str(_COMMENTS[self.rng.integers(len(_COMMENTS))])

    # -- pages ---------------------------------------------------------------------
    def page(self, lang: str, index: int, budget: int) -> _Page:
        c = self.c
        topic = f"{self.word(lang).capitalize()} {self.word(lang)} {index}"
        title = (_TALK[lang] + topic) if self.rng.random() < c.talk_share else topic
        is_test = self.rng.random() < c.test_share
        page = _Page(lang, title, self.initial_paragraphs(lang), float(self.rng.choice([0.6, 1.0, 1.4])), is_test)
        lo, hi = (c.train_end, c.test_end) if is_test else (c.train_start, c.train_end)
        span = (hi - lo).total_seconds()
        n = max(2, min(budget, int(self.rng.poisson(c.revisions_per_page))))
        # leave room at the end of the window for reverts and edit wars
        times = np.sort(self.rng.uniform(0, span * 0.97, size=n))
        step = max(60.0, span * 0.03 / 8)
        ts = lo + timedelta(seconds=float(times[0]))
        self.record(page, ts, self.user(exclude_bots=True), "", page.text(), "new page")
        k = 1
        while k < n:
            ts = max(ts + timedelta(seconds=1), lo + timedelta(seconds=float(times[k])))
            kind = self.user()
            before = page.text()
            if kind is UserKind.BOT:
                bad = False
            else:
                rate = c.registered_bad_rate * (c.anon_ratio if kind is UserKind.ANONYMOUS else 1.0)
                bad = self.rng.random() < min(0.95, rate * page.heat)
            new = self.bad_edit(lang, page.paragraphs) if bad else self.good_edit(lang, page.paragraphs)
            after = "\n\n".join(" ".join(p) for p in new)
            if after == before:
                k += 1
                continue
            self.record(page, ts, kind, before, after, self.comment())
            k += 1
            if not bad:
                page.paragraphs = new
                continue
            # revert right away; sometimes the vandal fights back once
            ts += timedelta(seconds=float(self.rng.uniform(30, step)))
            reverter = self.user(exclude_bots=True)
            self.record(page, ts, reverter, after, before, "Reverted edits")
            k += 1
            if self.rng.random() < c.edit_war_share:
                ts += timedelta(seconds=float(self.rng.uniform(30, step)))
                self.record(page, ts, kind, before, after, "Undo revision")
                ts += timedelta(seconds=float(self.rng.uniform(30, step)))
                self.record(page, ts, reverter, after, before, "Reverted edits")
                k += 2
        return page


def generate_records(config: SynthConfig | None = None) -> list[RevisionRecord]:
    """About ``n_revisions`` revisions spread evenly over the configured languages."""
    config = config or SynthConfig()
    gen = _Generator(config)
    per_lang = config.n_revisions // len(config.languages)
    out: list[RevisionRecord] = []
    for li, lang in enumerate(config.languages):
        target = per_lang + (config.n_revisions - per_lang * len(config.languages) if li == 0 else 0)
        produced, index = 0, 0
        while produced < target:
            page = gen.page(lang, index, target - produced)
            index += 1
            keep = page.revisions[: target - produced]
            out.extend(keep)
            produced += len(keep)
    return out


def write_synthetic_corpus(path: str | Path, config: SynthConfig | None = None) -> int:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return write_corpus(generate_records(config), path)


def vocabulary_hit(text: str, wiki_db: str) -> bool:
    """True when ``text`` contains any of the language's vandal vocabulary."""
    words = set(_VANDAL.get(wiki_db, "").split())
    return any(tok.strip(".,!?[]").lower() in words for tok in text.split())
