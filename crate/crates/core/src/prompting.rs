//! The four escalating prompt configurations.
//!
//! A prompt is a template frame with three slots (`{{instructions}}`,
//! `{{examples}}`, `{{chunk}}`) filled from an ordered list of clauses. Each
//! variant's clause list extends the previous variant's, so every clause of a
//! lower variant appears verbatim in every higher one.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::hash::Fingerprint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PromptVariant {
    ZeroShot,
    OneShot,
    FewShot,
    NegativeExamples,
}

impl PromptVariant {
    pub const ALL: [PromptVariant; 4] = [
        PromptVariant::ZeroShot,
        PromptVariant::OneShot,
        PromptVariant::FewShot,
        PromptVariant::NegativeExamples,
    ];

    /// Kebab-case name used on the command line and in file names.
    pub fn name(self) -> &'static str {
        match self {
            PromptVariant::ZeroShot => "zero-shot",
            PromptVariant::OneShot => "one-shot",
            PromptVariant::FewShot => "few-shot",
            PromptVariant::NegativeExamples => "negative-examples",
        }
    }

    /// Human-readable column label.
    pub fn label(self) -> &'static str {
        match self {
            PromptVariant::ZeroShot => "Zero Shot",
            PromptVariant::OneShot => "One Shot",
            PromptVariant::FewShot => "Few Shot",
            PromptVariant::NegativeExamples => "Negative Examples",
        }
    }

    pub fn next(self) -> Option<PromptVariant> {
        match self {
            PromptVariant::ZeroShot => Some(PromptVariant::OneShot),
            PromptVariant::OneShot => Some(PromptVariant::FewShot),
            PromptVariant::FewShot => Some(PromptVariant::NegativeExamples),
            PromptVariant::NegativeExamples => None,
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for PromptVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownVariant(pub String);

impl fmt::Display for UnknownVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "unknown prompt variant {:?}; valid names: zero-shot, one-shot, few-shot, negative-examples",
            self.0
        )
    }
}

#[cfg(feature = "std")]
impl std::error::Error for UnknownVariant {}

impl FromStr for PromptVariant {
    type Err = UnknownVariant;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String =
            s.trim().chars().filter(|c| c.is_alphanumeric()).flat_map(char::to_lowercase).collect();
        match key.as_str() {
            "zeroshot" => Ok(PromptVariant::ZeroShot),
            "oneshot" => Ok(PromptVariant::OneShot),
            "fewshot" => Ok(PromptVariant::FewShot),
            "negativeexamples" | "negative" => Ok(PromptVariant::NegativeExamples),
            _ => Err(UnknownVariant(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PositiveExample {
    pub snippet: String,
    pub triples: Vec<[String; 3]>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NegativeExample {
    pub triple: [String; 3],
    pub reason: String,
}

/// Everything a prompt may embed beyond the fixed directives.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExampleBank {
    #[serde(default)]
    pub ner_definition: String,
    #[serde(default)]
    pub positive_examples: Vec<PositiveExample>,
    #[serde(default)]
    pub negative_examples: Vec<NegativeExample>,
    #[serde(default)]
    pub negated_instructions: Vec<String>,
    #[serde(default)]
    pub focus_verbs: Vec<String>,
}

pub const DEFAULT_FOCUS_VERBS: &[&str] = &["agree", "sign", "ratify", "export", "import"];

/// Positives embedded by the few-shot variant.
pub const FEW_SHOT_POSITIVES: usize = 3;

fn t(s: &str, p: &str, o: &str) -> [String; 3] {
    [s.to_string(), p.to_string(), o.to_string()]
}

impl ExampleBank {
    pub fn empty() -> Self {
        Self {
            ner_definition: String::new(),
            positive_examples: Vec::new(),
            negative_examples: Vec::new(),
            negated_instructions: Vec::new(),
            focus_verbs: Vec::new(),
        }
    }
}

impl Default for ExampleBank {
    /// The bank shipped as `examples.json`.
    fn default() -> Self {
        Self {
            ner_definition: "Named Entity Recognition (NER) identifies spans of text that name \
                specific real-world entities, such as countries, governments, organisations, \
                agreements, institutions, products and economic or legal instruments, and \
                classifies them by type."
                .to_string(),
            positive_examples: alloc::vec![
                PositiveExample {
                    snippet: "Japan and Thailand signed the Economic Partnership Agreement in \
                        Bangkok on 3 April 2007."
                        .to_string(),
                    triples: alloc::vec![
                        t("Japan", "signed", "Economic Partnership Agreement"),
                        t("Thailand", "signed", "Economic Partnership Agreement"),
                    ],
                },
                PositiveExample {
                    snippet: "Thailand shall eliminate customs duties on originating goods of \
                        Japan in accordance with its Schedule."
                        .to_string(),
                    triples: alloc::vec![t("Thailand", "eliminates", "customs duties")],
                },
                PositiveExample {
                    snippet: "Canada may export softwood lumber to the European Union under \
                        the tariff rate quota."
                        .to_string(),
                    triples: alloc::vec![t("Canada", "exports", "softwood lumber")],
                },
                PositiveExample {
                    snippet: "Chile and Korea agree to cooperate in the field of customs \
                        procedures."
                        .to_string(),
                    triples: alloc::vec![
                        t("Chile", "cooperates with", "Korea"),
                        t("Korea", "cooperates with", "Chile"),
                    ],
                },
                PositiveExample {
                    snippet: "Singapore shall ratify the Agreement on Trade Facilitation of \
                        the World Trade Organization."
                        .to_string(),
                    triples: alloc::vec![t("Singapore", "ratifies", "Agreement on Trade Facilitation")],
                },
            ],
            negative_examples: alloc::vec![
                NegativeExample {
                    triple: t("Parties", "signed", "contract"),
                    reason: "'Parties' is a generic term, not a named entity; name the countries."
                        .to_string(),
                },
                NegativeExample {
                    triple: t("it", "means", "this"),
                    reason: "pronouns are not named entities and 'means' carries no trade action."
                        .to_string(),
                },
            ],
            negated_instructions: alloc::vec![
                "Do not use generic terms such as 'Parties', 'each Party' or 'the Agreement' as \
                 subject or object."
                    .to_string(),
                "Do not use pronouns as subject or object.".to_string(),
                "Do not use verbs that carry no trade meaning, such as 'means', 'includes' or \
                 'refers to'."
                    .to_string(),
            ],
            focus_verbs: DEFAULT_FOCUS_VERBS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// Something a bank lacks for a given variant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Deficiency {
    MissingNerDefinition,
    NotEnoughPositives { required: usize, found: usize },
    PositiveWithoutTriples(usize),
    MissingNegativeExamples,
    MissingNegatedInstructions,
    MissingFocusVerbs,
}

impl fmt::Display for Deficiency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Deficiency::MissingNerDefinition => f.write_str("missing ner_definition"),
            Deficiency::NotEnoughPositives { required, found } => {
                write!(f, "need at least {required} positive examples, found {found}")
            }
            Deficiency::PositiveWithoutTriples(i) => {
                write!(f, "positive example {i} has no expected triples")
            }
            Deficiency::MissingNegativeExamples => f.write_str("missing negative examples"),
            Deficiency::MissingNegatedInstructions => f.write_str("missing negated instructions"),
            Deficiency::MissingFocusVerbs => f.write_str("missing focus verbs"),
        }
    }
}

/// Lists what `bank` is missing for `variant`; empty means usable.
pub fn validate_bank(bank: &ExampleBank, variant: PromptVariant) -> Vec<Deficiency> {
    let mut out = Vec::new();
    let required_positives = match variant {
        PromptVariant::ZeroShot => 0,
        PromptVariant::OneShot => 1,
        PromptVariant::FewShot | PromptVariant::NegativeExamples => FEW_SHOT_POSITIVES,
    };
    if variant >= PromptVariant::OneShot {
        if bank.ner_definition.trim().is_empty() {
            out.push(Deficiency::MissingNerDefinition);
        }
        if bank.positive_examples.len() < required_positives {
            out.push(Deficiency::NotEnoughPositives {
                required: required_positives,
                found: bank.positive_examples.len(),
            });
        }
        let used = positives_used(bank, variant);
        for (i, ex) in bank.positive_examples.iter().enumerate().take(used) {
            if ex.triples.is_empty() {
                out.push(Deficiency::PositiveWithoutTriples(i));
            }
        }
    }
    if variant >= PromptVariant::FewShot && bank.focus_verbs.iter().all(|v| v.trim().is_empty()) {
        out.push(Deficiency::MissingFocusVerbs);
    }
    if variant == PromptVariant::NegativeExamples {
        if bank.negative_examples.is_empty() {
            out.push(Deficiency::MissingNegativeExamples);
        }
        if bank.negated_instructions.is_empty() {
            out.push(Deficiency::MissingNegatedInstructions);
        }
    }
    out
}

fn positives_used(bank: &ExampleBank, variant: PromptVariant) -> usize {
    let n = bank.positive_examples.len();
    match variant {
        PromptVariant::ZeroShot => 0,
        PromptVariant::OneShot => n.min(1),
        PromptVariant::FewShot => n.min(FEW_SHOT_POSITIVES),
        PromptVariant::NegativeExamples => n,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ClauseKind {
    TaskStatement,
    EntityConstraint,
    VerbConstraint,
    FocusVerbs,
    GenericSubjectRefinement,
    CoreferenceResolution,
    OutputFormat,
    NerDefinition,
    PositiveExample(usize),
    NegativeExample(usize),
    NegatedInstruction(usize),
}

impl ClauseKind {
    fn goes_in_examples(self) -> bool {
        matches!(
            self,
            ClauseKind::NerDefinition
                | ClauseKind::PositiveExample(_)
                | ClauseKind::NegativeExample(_)
                | ClauseKind::NegatedInstruction(_)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clause {
    pub kind: ClauseKind,
    pub text: String,
}

pub const TASK_STATEMENT: &str =
    "Extract subject-predicate-object triples from the trade agreement text given below.";
pub const ENTITY_CONSTRAINT: &str = "The subject and the object of every triple must be Named \
    Entities, such as countries, organisations, agreements, institutions, goods or economic terms.";
pub const VERB_CONSTRAINT: &str =
    "The predicate of every triple must be an English language verb or verb phrase.";
pub const OUTPUT_FORMAT: &str = "Write one triple per line in exactly this form: \
    (subject | predicate | object). Write nothing else.";
pub const GENERIC_SUBJECT_DIRECTIVE: &str = "If a triple would use a generic term such as \
    'Parties' or 'each Party', work out which named entities the term stands for in the text and \
    use those names instead.";
pub const COREFERENCE_DIRECTIVE: &str = "Resolve coreferences: replace pronouns and other \
    references with the named entity they refer to.";

/// Marker that starts the text section; the chunk always follows it.
pub const TEXT_MARKER: &str = "Text:";

/// Default frame used for every variant.
pub const DEFAULT_TEMPLATE: &str = "{{instructions}}\n\n{{examples}}\n\nText:\n{{chunk}}\n";

pub fn format_triple(s: &str, p: &str, o: &str) -> String {
    format!("({s} | {p} | {o})")
}

/// Ordered clause list for `variant`; each variant extends the previous one.
pub fn clauses_for(variant: PromptVariant, bank: &ExampleBank) -> Vec<Clause> {
    let mut out = alloc::vec![
        Clause { kind: ClauseKind::TaskStatement, text: TASK_STATEMENT.to_string() },
        Clause { kind: ClauseKind::EntityConstraint, text: ENTITY_CONSTRAINT.to_string() },
        Clause { kind: ClauseKind::VerbConstraint, text: VERB_CONSTRAINT.to_string() },
        Clause { kind: ClauseKind::OutputFormat, text: OUTPUT_FORMAT.to_string() },
    ];
    if variant >= PromptVariant::OneShot {
        out.push(Clause {
            kind: ClauseKind::NerDefinition,
            text: format!("Definition of Named Entity Recognition (NER): {}", bank.ner_definition.trim()),
        });
    }
    let used = positives_used(bank, variant);
    for (i, ex) in bank.positive_examples.iter().enumerate().take(used) {
        let mut text = format!("Example {}:\nPassage: {}\nTriples:", i + 1, ex.snippet.trim());
        for [s, p, o] in &ex.triples {
            text.push('\n');
            text.push_str(&format_triple(s, p, o));
        }
        out.push(Clause { kind: ClauseKind::PositiveExample(i), text });
    }
    if variant >= PromptVariant::FewShot {
        let verbs: Vec<&str> =
            bank.focus_verbs.iter().map(|v| v.trim()).filter(|v| !v.is_empty()).collect();
        out.push(Clause {
            kind: ClauseKind::FocusVerbs,
            text: format!(
                "Focus on economic trade-related verbs such as: {}.",
                verbs.join(", ")
            ),
        });
    }
    if variant >= PromptVariant::NegativeExamples {
        for (i, neg) in bank.negative_examples.iter().enumerate() {
            let [s, p, o] = &neg.triple;
            out.push(Clause {
                kind: ClauseKind::NegativeExample(i),
                text: format!("Wrong: {} because {}", format_triple(s, p, o), neg.reason.trim()),
            });
        }
        for (i, instr) in bank.negated_instructions.iter().enumerate() {
            out.push(Clause {
                kind: ClauseKind::NegatedInstruction(i),
                text: format!("- {}", instr.trim()),
            });
        }
        out.push(Clause {
            kind: ClauseKind::GenericSubjectRefinement,
            text: GENERIC_SUBJECT_DIRECTIVE.to_string(),
        });
        out.push(Clause {
            kind: ClauseKind::CoreferenceResolution,
            text: COREFERENCE_DIRECTIVE.to_string(),
        });
    }
    out
}

/// Per-variant template frames.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Templates {
    frames: [String; 4],
}

impl Default for Templates {
    fn default() -> Self {
        Self { frames: core::array::from_fn(|_| DEFAULT_TEMPLATE.to_string()) }
    }
}

impl Templates {
    /// Builds from per-variant frames, checking each has the required slots.
    pub fn new(frames: BTreeMap<PromptVariant, String>) -> Result<Self, PromptError> {
        let mut out = Self::default();
        for (variant, frame) in frames {
            check_template(variant, &frame)?;
            out.frames[variant.index()] = frame;
        }
        Ok(out)
    }

    pub fn get(&self, variant: PromptVariant) -> &str {
        &self.frames[variant.index()]
    }
}

fn check_template(variant: PromptVariant, frame: &str) -> Result<(), PromptError> {
    for slot in ["{{instructions}}", "{{examples}}", "{{chunk}}"] {
        if frame.matches(slot).count() != 1 {
            return Err(PromptError::Template {
                variant,
                reason: format!("template must contain {slot} exactly once"),
            });
        }
    }
    if !frame.trim_end().ends_with("{{chunk}}") {
        return Err(PromptError::Template {
            variant,
            reason: "{{chunk}} must be the last thing in the template".to_string(),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PromptError {
    Bank { variant: PromptVariant, deficiencies: Vec<Deficiency> },
    Template { variant: PromptVariant, reason: String },
}

impl fmt::Display for PromptError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PromptError::Bank { variant, deficiencies } => {
                write!(f, "example bank insufficient for {variant}: ")?;
                for (i, d) in deficiencies.iter().enumerate() {
                    if i > 0 {
                        f.write_str("; ")?;
                    }
                    write!(f, "{d}")?;
                }
                Ok(())
            }
            PromptError::Template { variant, reason } => {
                write!(f, "bad template for {variant}: {reason}")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for PromptError {}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedPrompt {
    pub variant: PromptVariant,
    pub text: String,
    pub clauses: Vec<ClauseKind>,
    pub constraint_fingerprint: String,
}

fn render_frame(frame: &str, slots: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(frame.len() + 256);
    let mut rest = frame;
    while let Some(start) = rest.find("{{") {
        let Some(len) = rest[start..].find("}}") else { break };
        let name = &rest[start + 2..start + len];
        match slots.iter().find(|(n, _)| *n == name) {
            Some((_, value)) => {
                out.push_str(&rest[..start]);
                out.push_str(value);
            }
            None => out.push_str(&rest[..start + len + 2]),
        }
        rest = &rest[start + len + 2..];
    }
    out.push_str(rest);
    out
}

fn squeeze_blank_lines(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut newlines = 0;
    for c in text.chars() {
        if c == '\n' {
            newlines += 1;
            if newlines > 2 {
                continue;
            }
        } else {
            newlines = 0;
        }
        out.push(c);
    }
    out
}

/// Fingerprint of the template and clause texts for `variant`, independent of any chunk.
pub fn prompt_fingerprint(variant: PromptVariant, bank: &ExampleBank, templates: &Templates) -> String {
    fingerprint_of(templates.get(variant), &clauses_for(variant, bank))
}

fn fingerprint_of(frame: &str, clauses: &[Clause]) -> String {
    let mut fp = Fingerprint::new();
    fp.part(frame.as_bytes());
    for clause in clauses {
        fp.part(format!("{:?}", clause.kind).as_bytes());
        fp.part(clause.text.as_bytes());
    }
    fp.finish()
}

/// Renders the prompt for one chunk.
pub fn build_prompt(
    variant: PromptVariant,
    bank: &ExampleBank,
    templates: &Templates,
    chunk_text: &str,
) -> Result<RenderedPrompt, PromptError> {
    let deficiencies = validate_bank(bank, variant);
    if !deficiencies.is_empty() {
        return Err(PromptError::Bank { variant, deficiencies });
    }
    let frame = templates.get(variant);
    check_template(variant, frame)?;
    let clauses = clauses_for(variant, bank);

    let mut instructions = String::new();
    let mut examples = String::new();
    for clause in &clauses {
        let target = if clause.kind.goes_in_examples() { &mut examples } else { &mut instructions };
        if !target.is_empty() {
            target.push_str(if clause.kind.goes_in_examples() { "\n\n" } else { "\n" });
        }
        target.push_str(&clause.text);
    }
    let body = render_frame(frame, &[("instructions", &instructions), ("examples", &examples)]);
    let body = squeeze_blank_lines(&body);
    // chunk goes in last so its contents are never treated as slots
    let text = render_frame(&body, &[("chunk", chunk_text)]);

    Ok(RenderedPrompt {
        variant,
        constraint_fingerprint: fingerprint_of(frame, &clauses),
        clauses: clauses.iter().map(|c| c.kind).collect(),
        text,
    })
}

/// Marker line that identifies a follow-up refinement request.
pub const REFINE_MARKER: &str = "Refine the generic term";

/// Which side of a triple a refinement targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenericSide {
    Subject,
    Object,
    Both,
}

/// Follow-up prompt asking the model to replace a generic subject/object.
pub fn build_refinement_prompt(
    subject: &str,
    predicate: &str,
    object: &str,
    side: GenericSide,
    chunk_text: &str,
) -> String {
    let what = match side {
        GenericSide::Subject => format!("its subject \"{subject}\" is a generic term"),
        GenericSide::Object => format!("its object \"{object}\" is a generic term"),
        GenericSide::Both => format!(
            "its subject \"{subject}\" and its object \"{object}\" are generic terms"
        ),
    };
    format!(
        "{REFINE_MARKER} in the triple {}: {what} that does not name a specific entity. \
         Using the text below, replace the generic term with the named entities it stands for \
         and keep the predicate unchanged. Answer with exactly one line of the form \
         (subject | predicate | object).\n\n{TEXT_MARKER}\n{chunk_text}\n",
        format_triple(subject, predicate, object)
    )
}
