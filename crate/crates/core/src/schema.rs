//! Questionnaire schema: the 70 coded survey items, their prompts, and the
//! 21 factors they roll up into.
//!
//! Factor membership is fixed: every factor owns a contiguous run of variable
//! ids and the runs tile `x1..x70` exactly. A schema loaded from JSON may
//! change prompts or the response scale, never the grouping.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of questionnaire variables.
pub const NUM_VARIABLES: usize = 70;
/// Number of factors.
pub const NUM_FACTORS: usize = 21;

/// A questionnaire variable, `x1` through `x70`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VariableId(u8);

impl VariableId {
    pub fn new(index: usize) -> Result<Self> {
        if (1..=NUM_VARIABLES).contains(&index) {
            Ok(VariableId(index as u8))
        } else {
            Err(Error::InvalidVariableId(format!("x{index}")))
        }
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// All 70 ids in ascending order.
    pub fn all() -> impl Iterator<Item = VariableId> {
        (1..=NUM_VARIABLES as u8).map(VariableId)
    }

    pub fn name(self) -> String {
        self.to_string()
    }
}

impl fmt::Display for VariableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.0)
    }
}

impl FromStr for VariableId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let digits = s
            .strip_prefix('x')
            .ok_or_else(|| Error::InvalidVariableId(s.to_string()))?;
        // reject "x09", "x+9" and friends so rendering round-trips
        if digits.is_empty() || digits.starts_with('0') || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(Error::InvalidVariableId(s.to_string()));
        }
        let index: usize = digits
            .parse()
            .map_err(|_| Error::InvalidVariableId(s.to_string()))?;
        VariableId::new(index).map_err(|_| Error::InvalidVariableId(s.to_string()))
    }
}

impl Serialize for VariableId {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for VariableId {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One of the 21 questionnaire factors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum FactorCode {
    Ssh,
    Sf,
    Satd,
    Sat,
    St,
    Lat,
    Lts,
    Lcs,
    La,
    Ld,
    Oh,
    Oe,
    Ob,
    Uf,
    Ucp,
    Ult,
    Uta,
    Fi,
    Fs,
    Fpe,
    Fpg,
}

/// (code, first variable, last variable, title)
const FACTOR_TABLE: [(FactorCode, usize, usize, &str); NUM_FACTORS] = [
    (FactorCode::Ssh, 1, 3, "Student Study Habit"),
    (FactorCode::Sf, 4, 6, "Student Fear and Perception"),
    (FactorCode::Satd, 7, 9, "Student Attendance"),
    (FactorCode::Sat, 10, 13, "Student Attitude"),
    (FactorCode::St, 14, 16, "Tutorials and Extra Classes"),
    (FactorCode::Lat, 17, 20, "Lecturer Attitude"),
    (FactorCode::Lts, 21, 24, "Teaching Style"),
    (FactorCode::Lcs, 25, 28, "Communication Skills"),
    (FactorCode::La, 29, 31, "Lecturer Availability"),
    (FactorCode::Ld, 32, 35, "Lecturer Dedication"),
    (FactorCode::Oh, 36, 38, "Health"),
    (FactorCode::Oe, 39, 41, "Electricity"),
    (FactorCode::Ob, 42, 45, "Background Knowledge"),
    (FactorCode::Uf, 46, 49, "Facilities"),
    (FactorCode::Ucp, 50, 52, "Class Population"),
    (FactorCode::Ult, 53, 55, "Lecture Time"),
    (FactorCode::Uta, 56, 58, "Teaching Aids"),
    (FactorCode::Fi, 59, 61, "Family Income"),
    (FactorCode::Fs, 62, 64, "Family Stress"),
    (FactorCode::Fpe, 65, 67, "Parent Education"),
    (FactorCode::Fpg, 68, 70, "Proper Guidance"),
];

impl FactorCode {
    pub const ALL: [FactorCode; NUM_FACTORS] = [
        FactorCode::Ssh,
        FactorCode::Sf,
        FactorCode::Satd,
        FactorCode::Sat,
        FactorCode::St,
        FactorCode::Lat,
        FactorCode::Lts,
        FactorCode::Lcs,
        FactorCode::La,
        FactorCode::Ld,
        FactorCode::Oh,
        FactorCode::Oe,
        FactorCode::Ob,
        FactorCode::Uf,
        FactorCode::Ucp,
        FactorCode::Ult,
        FactorCode::Uta,
        FactorCode::Fi,
        FactorCode::Fs,
        FactorCode::Fpe,
        FactorCode::Fpg,
    ];

    fn row(self) -> &'static (FactorCode, usize, usize, &'static str) {
        &FACTOR_TABLE[self as usize]
    }

    /// Upper-case code as printed in the questionnaire, e.g. `SATD`.
    pub fn code(self) -> &'static str {
        match self {
            FactorCode::Ssh => "SSH",
            FactorCode::Sf => "SF",
            FactorCode::Satd => "SATD",
            FactorCode::Sat => "SAT",
            FactorCode::St => "ST",
            FactorCode::Lat => "LAT",
            FactorCode::Lts => "LTS",
            FactorCode::Lcs => "LCS",
            FactorCode::La => "LA",
            FactorCode::Ld => "LD",
            FactorCode::Oh => "OH",
            FactorCode::Oe => "OE",
            FactorCode::Ob => "OB",
            FactorCode::Uf => "UF",
            FactorCode::Ucp => "UCP",
            FactorCode::Ult => "ULT",
            FactorCode::Uta => "UTA",
            FactorCode::Fi => "FI",
            FactorCode::Fs => "FS",
            FactorCode::Fpe => "FPE",
            FactorCode::Fpg => "FPG",
        }
    }

    /// Lower-case feature name used in factor-level datasets and models.
    pub fn feature_name(self) -> String {
        self.code().to_ascii_lowercase()
    }

    pub fn title(self) -> &'static str {
        self.row().3
    }

    /// Member variables, ascending.
    pub fn members(self) -> Vec<VariableId> {
        let &(_, first, last, _) = self.row();
        (first..=last).map(|i| VariableId(i as u8)).collect()
    }

    pub fn member_count(self) -> usize {
        let &(_, first, last, _) = self.row();
        last - first + 1
    }

    /// The factor a variable belongs to.
    pub fn of(id: VariableId) -> FactorCode {
        let i = id.index();
        FACTOR_TABLE
            .iter()
            .find(|(_, first, last, _)| (*first..=*last).contains(&i))
            .map(|row| row.0)
            .expect("factor table covers x1..x70")
    }

    /// Parses either the upper-case code or the lower-case feature name.
    pub fn parse(s: &str) -> Result<FactorCode> {
        FactorCode::ALL
            .iter()
            .copied()
            .find(|c| c.code() == s || c.feature_name() == s)
            .ok_or_else(|| Error::UnknownFactor(s.to_string()))
    }
}

impl fmt::Display for FactorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// Integer agreement scale responses are collected on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseScale {
    pub min: i64,
    pub max: i64,
}

impl Default for ResponseScale {
    fn default() -> Self {
        ResponseScale { min: 1, max: 5 }
    }
}

impl ResponseScale {
    pub fn new(min: i64, max: i64) -> Result<Self> {
        if min < max {
            Ok(ResponseScale { min, max })
        } else {
            Err(Error::InvalidScale { min, max })
        }
    }

    /// Largest coded value of a single variable. Coded values run `0..=span`.
    pub fn span(&self) -> f64 {
        (self.max - self.min) as f64
    }

    /// Zero-offset coding of a raw response: the scale minimum codes to 0.
    /// Returns `None` for non-integers and values outside the scale.
    pub fn code(&self, raw: f64) -> Option<f64> {
        if !raw.is_finite() || raw.fract() != 0.0 {
            return None;
        }
        if raw < self.min as f64 || raw > self.max as f64 {
            return None;
        }
        Some(raw - self.min as f64)
    }

    /// Inverse of [`ResponseScale::code`].
    pub fn decode(&self, coded: f64) -> f64 {
        coded + self.min as f64
    }

    /// Whether a coded value summed over `members` variables is in range.
    pub fn coded_in_range(&self, coded: f64, members: usize) -> bool {
        coded.is_finite() && coded >= 0.0 && coded <= self.span() * members as f64
    }
}

/// Bounds of the grade axis; predictions are clamped into it for display.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradeBounds {
    pub min: f64,
    pub max: f64,
}

impl Default for GradeBounds {
    fn default() -> Self {
        GradeBounds { min: 0.0, max: 7.0 }
    }
}

impl GradeBounds {
    pub fn contains(&self, v: f64) -> bool {
        v.is_finite() && v >= self.min && v <= self.max
    }

    pub fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.min, self.max)
    }
}

/// A grade on the grade-point axis.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GradeValue(f64);

impl GradeValue {
    pub fn new(value: f64, bounds: &GradeBounds) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::NonFiniteInput);
        }
        if !bounds.contains(value) {
            return Err(Error::OutOfScaleValue { row: 0, column: "grade".into(), value });
        }
        Ok(GradeValue(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableEntry {
    pub id: VariableId,
    pub prompt: String,
    pub factor: FactorCode,
}

/// The questionnaire: 70 variables in order, each tagged with its factor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawSchema")]
pub struct QuestionnaireSchema {
    pub scale: ResponseScale,
    pub variables: Vec<VariableEntry>,
}

#[derive(Deserialize)]
struct RawSchema {
    scale: ResponseScale,
    variables: Vec<VariableEntry>,
}

impl TryFrom<RawSchema> for QuestionnaireSchema {
    type Error = Error;

    fn try_from(raw: RawSchema) -> Result<Self> {
        QuestionnaireSchema::new(raw.scale, raw.variables)
    }
}

const PROMPTS: [&str; NUM_VARIABLES] = [
    "I had enough time to study programming",
    "Studying before attending a class aided my assimilation during programming classes.",
    "Studying programming was never a wasted effort",
    "Programming sounded very scary",
    "I was always nervous during programming classes",
    "I was always nervous during programming examinations",
    "I attended programming classes regularly",
    "Blending in after missing a class was very easy",
    "I was very serious with programming classes",
    "I believed I could understand the programming course",
    "I had interest in programming beyond class level",
    "Programming was not confusing and did not cause headache",
    "Programming is relevant to my pursuit",
    "Group discussions helped me to understand programming",
    "Attending programming tutorials was very helpful",
    "Programming courses tutorials helped me so much",
    "Motivation of programming lecturers encouraged my commitment towards learning programming",
    "Programming language lecturers helped me develop interest in programming",
    "Programming languages lecturers were never partial in their dealings with students",
    "Programming lecturers were friendly during lectures",
    "Programming language lecturers enforced discipline during their lectures",
    "Programming languages lecturers were too serious during lectures",
    "Teaching methods and styles of programming lecturers inhibited lecture clarity",
    "Programming language lecturers wasted time on matters with less relevance in class",
    "Programming language lecturers were always clear, precise and communicates understandably",
    "Programming language lecturers made use of enough relevant instructional materials",
    "Programming language lecturers delivered course contents well and to my understanding",
    "Programming language lecturers were very clear and explicit",
    "Programming language lecturers didn't miss classes",
    "Programming language lecturers attended to me whenever I had difficulties with their course(s)",
    "Programming lecturers were always available",
    "Programming course lecturers allowed students to ask questions and take time to explain",
    "Programming course lecturers came to class fully prepared",
    "Programming languages lecturers spent extra time to explain things during class",
    "Programming language lecturers usually came early to class",
    "I fell sick quite often",
    "Prolong usage of computer caused me headache",
    "I took a few compulsory medications frequently",
    "It was difficult to charge my computer even within the campus",
    "Erratic power supply reduced the effectiveness of my practice",
    "Consistent power supply helped me in programming courses",
    "I had a good background in physics",
    "I had a good background in mathematics",
    "I had a good background in English",
    "Strong background in Physics and Mathematics helped me in programming",
    "Absence of accessible ICT facilities inhibited my programming performance",
    "The environment where we had programming lectures was not conducive",
    "Lack of computer programming facilities disrupted clear understanding of programming lessons",
    "The school library was not equipped with materials relevant to programming",
    "Large class population disrupted my concentration during programming lectures",
    "Population of students offering programming courses debarred my commitment to learning",
    "Effectiveness of the programming lecturers' teaching was reduced by huge programming class population.",
    "Programming lectures were scheduled after an equally tiring lecture",
    "Programming courses were scheduled to non-conductive times",
    "We had programming classes at unfavorable times",
    "Programming lecture theatres were equipped with audio-visuals and learning aids",
    "Programming courses were analyzed clearly to sight",
    "I had a visual understanding of what the programming lecturer was implying",
    "Expensive cost of living did not affect my performance in programming classes",
    "My family could afford to buy enough programming textbooks",
    "My family sponsored my academic pursuit",
    "Quarrel between family members is normal",
    "I had to travel to settle quarrels within my family",
    "Quarrel between my family members escalates a times",
    "My father is familiar with computers",
    "My mother is familiar with computers",
    "My parents are well educated",
    "My parent would want me to offer programming courses",
    "I received educational advices from family members often",
    "My family believed that a proper study will help me in programming courses",
];

/// The canonical 70-item questionnaire on the default 1..5 scale.
pub fn builtin_schema() -> QuestionnaireSchema {
    let variables = VariableId::all()
        .zip(PROMPTS.iter())
        .map(|(id, prompt)| VariableEntry { id, prompt: (*prompt).to_string(), factor: FactorCode::of(id) })
        .collect();
    QuestionnaireSchema { scale: ResponseScale::default(), variables }
}

/// Contiguous member ids of `code`, ascending.
pub fn factor_members(schema: &QuestionnaireSchema, code: FactorCode) -> Vec<VariableId> {
    schema.variables.iter().filter(|v| v.factor == code).map(|v| v.id).collect()
}

impl QuestionnaireSchema {
    /// Validates that `variables` is exactly x1..x70 in order with the
    /// canonical factor grouping.
    pub fn new(scale: ResponseScale, variables: Vec<VariableEntry>) -> Result<Self> {
        ResponseScale::new(scale.min, scale.max)?;
        if variables.len() != NUM_VARIABLES {
            return Err(Error::InvalidSchema(format!(
                "expected {NUM_VARIABLES} variables, found {}",
                variables.len()
            )));
        }
        for (expected, entry) in VariableId::all().zip(&variables) {
            if entry.id != expected {
                return Err(Error::InvalidSchema(format!("expected {expected} in position {}, found {}", expected.index(), entry.id)));
            }
            if entry.factor != FactorCode::of(expected) {
                return Err(Error::InvalidSchema(format!(
                    "{expected} must belong to {}, not {}",
                    FactorCode::of(expected),
                    entry.factor
                )));
            }
        }
        Ok(QuestionnaireSchema { scale, variables })
    }

    pub fn factor_of(&self, id: VariableId) -> FactorCode {
        self.variables[id.index() - 1].factor
    }

    pub fn prompt(&self, id: VariableId) -> &str {
        &self.variables[id.index() - 1].prompt
    }

    pub fn factor_members(&self, code: FactorCode) -> Vec<VariableId> {
        factor_members(self, code)
    }

    pub fn variable_names(&self) -> Vec<String> {
        self.variables.iter().map(|v| v.id.to_string()).collect()
    }

    pub fn factor_names(&self) -> Vec<String> {
        FactorCode::ALL.iter().map(|c| c.feature_name()).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("schema serializes")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("schema serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}
