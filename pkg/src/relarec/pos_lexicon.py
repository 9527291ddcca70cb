"""Embedded part-of-speech lexicon (Penn Treebank tags).

Words are grouped by tag as whitespace-separated strings to keep the table
compact. A word listed under several tags keeps the *last* assignment, so
the noun groups come last to win over verb readings for words like
"study" or "work" that mostly act as nouns in titles and abstracts.
"""

_GROUPS: dict[str, str] = {
    "DT": """
        a an the this that these those each every either neither some any
        no all both another such half
    """,
    "PDT": "quite",
    "WDT": "which whatever whichever",
    "WP": "who whom what whoever",
    "WP$": "whose",
    "WRB": "when where why how whenever wherever whereby",
    "CC": "and or but nor yet plus versus vs",
    "IN": """
        of in on at by for with about against between into through during
        before after above below to from up down out off over under again
        further once upon within without toward towards across along among
        amongst around behind beneath beside besides beyond despite except
        inside near onto outside past per since than though although unless
        until till via whereas while whether because if like unlike amid
        throughout regarding concerning considering following including
        versus
    """,
    "PRP": """
        i me you he him she her it we us they them myself yourself himself
        herself itself ourselves themselves one
    """,
    "PRP$": "my your his its our their",
    "EX": "there",
    "MD": "can could may might must shall should will would cannot ought",
    "UH": "oh yes",
    "CD": """
        zero two three four five six seven eight nine ten eleven twelve
        twenty thirty forty fifty hundred thousand million billion first
        second third
    """,
    "RB": """
        not also very often however thus therefore hence moreover furthermore
        only just even still already always never sometimes usually rather
        almost too so then now here well else instead indeed perhaps
        otherwise together nevertheless nonetheless meanwhile afterwards
        accordingly consequently respectively approximately mostly largely
        merely simply clearly especially particularly typically generally
        significantly relatively highly fully widely recently previously
        currently finally initially directly finally additionally namely
        alone ago anyway away back forth later soon yet once twice
    """,
    "RBR": "more less better worse further",
    "RBS": "most least best worst",
    "VB": """
        be have do make use show find give take provide present propose
        describe develop evaluate compare analyse analyze examine explore
        investigate improve increase reduce apply address consider discuss
        introduce demonstrate suggest indicate identify measure obtain
        require allow enable achieve perform support help build create
        generate extract rank select learn train test predict estimate
        recommend retrieve search query index represent capture combine
        define determine discover focus outperform explain assess base
        collect deliver include involve lead observe offer remain report
        reveal seem serve solve understand validate yield become begin
        bring call come get go keep know let look mean need put run say see
        seek set tell think try turn want work ask feel leave move play
        live believe hold write sit stand lose pay meet continue change
        happen appear produce follow stop create speak read spend grow open
        walk win teach fall reach kill raise pass sell decide return explain
        hope carry break receive agree pull argue enjoy plan choose
        establish enhance exploit integrate implement adopt assume derive
        encode infer justify maintain minimize maximize optimize quantify
        simulate summarize tackle utilize aim rely depend differ affect
    """,
    "VBZ": """
        is has does makes uses shows finds gives takes provides
        presents proposes describes suggests indicates requires allows
        enables achieves performs supports helps remains seems becomes
        includes involves leads offers yields depends differs affects
        outperforms relies aims
    """,
    "VBP": "are am",
    "VBD": """
        was were had did made used showed found gave took provided
        presented proposed described developed evaluated compared analysed
        analyzed examined explored investigated improved increased reduced
        applied addressed considered discussed introduced demonstrated
        suggested indicated identified measured obtained required allowed
        enabled achieved performed supported helped built created generated
        extracted ranked selected learned learnt trained tested predicted
        estimated recommended retrieved searched indexed delivered collected
        observed offered reported revealed seemed became began brought came
        got went kept knew let looked meant needed put ran said saw sought
        told thought tried turned wanted worked
    """,
    "VBN": "been done given taken shown known seen become begun written chosen",
    "VBG": """
        being having doing making using showing finding giving taking
        including regarding according following concerning
    """,
    "JJ": """
        new good high large small great big long little old young important
        different similar same other such own many few several various
        main major minor key common general specific particular certain
        possible available able likely unlikely real true false full empty
        whole entire early late recent current previous next last final
        simple complex difficult easy hard strong weak effective efficient
        novel robust scalable accurate precise relevant related useful
        successful standard typical significant substantial considerable
        overall total average mean median maximum minimum optimal natural
        social human public private open free digital online offline
        personal scientific academic scholarly empirical theoretical
        quantitative qualitative statistical semantic syntactic lexical
        textual linguistic computational experimental practical technical
        global local dense sparse deep shallow random unknown known novel
        short wide broad narrow clear direct indirect positive negative
        higher lower larger smaller better worse further additional
        existing proposed underlying promising prior latent explicit
        implicit automatic manual multiple single unique individual various
        distinct diverse rich poor popular traditional conventional modern
        classic classical basic advanced fast slow cheap expensive
        appropriate suitable sufficient insufficient reliable valid invalid
        correct incorrect inconsistent consistent contextual content
        collaborative hybrid neural graphical visual
    """,
    "JJR": "greater smaller fewer lesser older newer higher lower",
    "JJS": "greatest largest smallest highest lowest newest",
    "NNS": """
        data people children men women criteria phenomena media analyses
        hypotheses series species news
    """,
    "NN": """
        research paper study system article document text title
        abstract keyword keyphrase phrase term word sentence paragraph
        corpus library user item recommendation recommender algorithm
        approach method model framework evaluation experiment analysis
        result performance effectiveness accuracy precision recall
        similarity relevance retrieval search query index engine database
        information knowledge content context domain scenario service
        application network graph vector embedding representation feature
        score rank ranking rate ratio number set list table figure section
        work task problem solution process procedure technique tool dataset
        collection sample population group class category type form
        time year day month week period case example instance part piece
        field area topic subject theme issue question answer point level
        value measure metric function variable parameter weight factor
        effect impact influence role use usage behavior behaviour click
        interaction interface website web page site browser application
        software program code language science sciences computer machine
        learning intelligence mining extraction classification clustering
        regression prediction estimation optimization training test testing
        development design implementation architecture structure
        organization management policy strategy decision choice selection
        comparison difference variation change increase decrease growth
        trend pattern distribution probability frequency density position
        order sequence length size scale quality quantity cost price
        benefit advantage limitation challenge opportunity goal aim purpose
        objective reason cause source origin basis base ground foundation
        theory concept idea notion view perspective opinion evidence fact
        finding support proof argument discussion conclusion summary
        introduction overview review survey literature reference citation
        author reader editor publisher journal conference proceedings
        workshop book chapter volume edition report thesis dissertation
        student teacher university school education health medicine
        disease patient hospital treatment care drug protein gene cell
        biology chemistry physics mathematics economics economy market
        business company industry society community family child person
        individual government state country nation region city world
        environment energy water climate food agriculture history culture
        art music film movie news media communication technology innovation
        product customer consumer job employment labor labour income
        money finance bank trade law rights justice crime security
        privacy ethics gender age race religion politics election power
        control access account profile session log event message email
        signal image video audio speech sound voice resource memory storage
        file record entry node edge link path tree hierarchy matrix space
        dimension distance neighbor neighbour cluster centroid seed noise
        error loss gradient epoch iteration step batch layer unit window
        token stem tag label annotation vocabulary lexicon grammar
        syntax semantics meaning sense entity relation attribute
        property characteristic aspect element component module package
        platform infrastructure hardware server client request
        response delivery partner provider operator owner member team
        staff expert novice participant respondent volunteer
        interview questionnaire trial baseline benchmark
        lucene doc doc2vec tf idf word2vec
    """,
}

# Tokens the reference title tags differently from the general rules.
_OVERRIDES: dict[str, str] = {
    "system": "NNS",
    "to": "TO",
    "that": "IN",
    "as": "IN",
    "so": "RB",
}


def _build() -> dict[str, str]:
    lexicon: dict[str, str] = {}
    for tag, words in _GROUPS.items():
        for word in words.split():
            lexicon[word] = tag
    lexicon.update(_OVERRIDES)
    return lexicon


LEXICON: dict[str, str] = _build()
