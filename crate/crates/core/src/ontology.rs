//! Ontology concepts and predicates exchanged between agents, plus the
//! textual content codec used in message bodies.
//!
//! The surface syntax is parenthesized, e.g.
//!
//! ```text
//! isProvider (Place (Building Airport ; Floor 0); Position: Belt (patch 18 6) ; AID: 51 ; Service (Name: Baggage-Delivery) )
//! Provide (Product (Name: Baggage-Delivery ; Characteristics: Baggage-Number 1 ) ; AID: 51 )
//! ```
//!
//! See `docs/content-grammar.md` for the full grammar. Whitespace between
//! tokens is insignificant when parsing; rendering always produces the
//! canonical single-space form.

use std::fmt;

use thiserror::Error;

/// Identifier of any agent in a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AgentId(pub u32);

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Grid cell coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Position {
    pub x: u32,
    pub y: u32,
}

impl Position {
    pub const fn new(x: u32, y: u32) -> Self {
        Self { x, y }
    }

    pub fn manhattan(self, other: Position) -> u32 {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Place {
    pub building: String,
    pub floor: i32,
}

impl Place {
    pub fn airport() -> Self {
        Self {
            building: "Airport".to_string(),
            floor: 0,
        }
    }
}

/// A position together with the optional zone label it is rendered with
/// (`Position: Belt (patch 18 6)`).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Site {
    pub label: Option<String>,
    pub position: Position,
}

impl Site {
    pub fn new(label: impl Into<String>, position: Position) -> Self {
        Self {
            label: Some(label.into()),
            position,
        }
    }

    pub fn bare(position: Position) -> Self {
        Self {
            label: None,
            position,
        }
    }
}

/// Category of shop. Rendered as a capital letter (`A`, `B`, ...).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ShopType(pub u8);

impl ShopType {
    pub const MAX_TYPES: usize = 10;

    pub fn letter(self) -> char {
        (b'A' + self.0) as char
    }

    pub fn from_letter(c: char) -> Option<Self> {
        if c.is_ascii_uppercase() && ((c as u8 - b'A') as usize) < Self::MAX_TYPES {
            Some(ShopType(c as u8 - b'A'))
        } else {
            None
        }
    }
}

impl fmt::Display for ShopType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Service {
    pub name: String,
}

impl Service {
    pub const CHECK_IN: &'static str = "Check-in";
    pub const PASSPORT_CONTROL: &'static str = "Passport-Control";
    pub const BAGGAGE_DELIVERY: &'static str = "Baggage-Delivery";
    pub const BOARDING: &'static str = "Boarding";
    pub const FLIGHT_INFO: &'static str = "Flight-Info";
    pub const BOARDING_INFO: &'static str = "Boarding-Info";
    pub const BAGGAGE_INFO: &'static str = "Baggage-Info";

    pub fn named(name: impl Into<String>) -> Self {
        Self { name: name.into() }
    }

    pub fn check_in() -> Self {
        Self::named(Self::CHECK_IN)
    }

    pub fn passport_control() -> Self {
        Self::named(Self::PASSPORT_CONTROL)
    }

    pub fn shopping(kind: ShopType) -> Self {
        Self::named(format!("Shopping-{}", kind.letter()))
    }

    pub fn baggage_delivery() -> Self {
        Self::named(Self::BAGGAGE_DELIVERY)
    }

    pub fn boarding() -> Self {
        Self::named(Self::BOARDING)
    }

    /// Shop category if this is a shopping service.
    pub fn shop_type(&self) -> Option<ShopType> {
        let rest = self.name.strip_prefix("Shopping-")?;
        let mut chars = rest.chars();
        let c = chars.next()?;
        if chars.next().is_some() {
            return None;
        }
        ShopType::from_letter(c)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Feature {
    pub name: String,
    pub value: String,
}

impl Feature {
    pub fn new(name: impl Into<String>, value: impl ToString) -> Self {
        Self {
            name: name.into(),
            value: value.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Product {
    pub name: String,
    pub characteristics: Vec<Feature>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Context {
    pub name: String,
    pub characteristics: Vec<Feature>,
}

/// Passenger profile. Serialized as a feature list with fixed attribute
/// names: `shopping-interest.<type>`, `baggage-count`, `danger-perception`
/// and `flight-number`.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub name: String,
    /// Interest weight in `[0, 1]` per shop type, indexed by `ShopType`.
    pub shopping_interest: Vec<f64>,
    pub suitcases: u32,
    /// Danger perception level in `[0, 1]`.
    pub danger: f64,
    pub flight: String,
}

pub const FEATURE_SHOPPING: &str = "shopping-interest.";
pub const FEATURE_BAGGAGE: &str = "baggage-count";
pub const FEATURE_DANGER: &str = "danger-perception";
pub const FEATURE_FLIGHT: &str = "flight-number";

impl Profile {
    pub fn to_features(&self) -> Vec<Feature> {
        let mut out: Vec<Feature> = self
            .shopping_interest
            .iter()
            .enumerate()
            .map(|(i, w)| {
                Feature::new(
                    format!("{FEATURE_SHOPPING}{}", ShopType(i as u8).letter()),
                    w,
                )
            })
            .collect();
        out.push(Feature::new(FEATURE_BAGGAGE, self.suitcases));
        out.push(Feature::new(FEATURE_DANGER, self.danger));
        out.push(Feature::new(FEATURE_FLIGHT, &self.flight));
        out
    }

    pub fn from_features(name: &str, features: &[Feature]) -> Result<Self, ProfileError> {
        let mut interest: Vec<Option<f64>> = Vec::new();
        let mut suitcases = None;
        let mut danger = None;
        let mut flight = None;
        for f in features {
            if let Some(letter) = f.name.strip_prefix(FEATURE_SHOPPING) {
                let mut chars = letter.chars();
                let kind = match (chars.next().and_then(ShopType::from_letter), chars.next()) {
                    (Some(k), None) => k,
                    _ => return Err(ProfileError::UnknownAttribute(f.name.clone())),
                };
                let w = parse_unit(&f.name, &f.value)?;
                let idx = kind.0 as usize;
                if interest.len() <= idx {
                    interest.resize(idx + 1, None);
                }
                if interest[idx].replace(w).is_some() {
                    return Err(ProfileError::Duplicate(f.name.clone()));
                }
            } else if f.name == FEATURE_BAGGAGE {
                let n = f
                    .value
                    .parse::<u32>()
                    .map_err(|_| ProfileError::BadValue(f.name.clone(), f.value.clone()))?;
                if suitcases.replace(n).is_some() {
                    return Err(ProfileError::Duplicate(f.name.clone()));
                }
            } else if f.name == FEATURE_DANGER {
                let d = parse_unit(&f.name, &f.value)?;
                if danger.replace(d).is_some() {
                    return Err(ProfileError::Duplicate(f.name.clone()));
                }
            } else if f.name == FEATURE_FLIGHT {
                if flight.replace(f.value.clone()).is_some() {
                    return Err(ProfileError::Duplicate(f.name.clone()));
                }
            } else {
                return Err(ProfileError::UnknownAttribute(f.name.clone()));
            }
        }
        if interest.is_empty() {
            return Err(ProfileError::Missing(FEATURE_SHOPPING.to_string()));
        }
        let shopping_interest = interest
            .into_iter()
            .enumerate()
            .map(|(i, w)| {
                w.ok_or_else(|| {
                    ProfileError::Missing(format!("{FEATURE_SHOPPING}{}", ShopType(i as u8)))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Profile {
            name: name.to_string(),
            shopping_interest,
            suitcases: suitcases.ok_or_else(|| ProfileError::Missing(FEATURE_BAGGAGE.into()))?,
            danger: danger.ok_or_else(|| ProfileError::Missing(FEATURE_DANGER.into()))?,
            flight: flight.ok_or_else(|| ProfileError::Missing(FEATURE_FLIGHT.into()))?,
        })
    }
}

fn parse_unit(name: &str, value: &str) -> Result<f64, ProfileError> {
    match value.parse::<f64>() {
        Ok(v) if (0.0..=1.0).contains(&v) => Ok(v),
        _ => Err(ProfileError::BadValue(name.to_string(), value.to_string())),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProfileError {
    #[error("unknown profile attribute `{0}`")]
    UnknownAttribute(String),
    #[error("profile attribute `{0}` given twice")]
    Duplicate(String),
    #[error("profile attribute `{0}` missing")]
    Missing(String),
    #[error("profile attribute `{0}` has invalid value `{1}`")]
    BadValue(String, String),
}

/// Five predicates and one action.
#[derive(Debug, Clone, PartialEq)]
pub enum Predicate {
    HasLocation {
        place: Place,
        site: Site,
        aid: AgentId,
    },
    HasServices {
        place: Place,
        site: Site,
        services: Vec<Service>,
    },
    IsProvider {
        place: Place,
        site: Site,
        aid: AgentId,
        service: Service,
    },
    HasContext {
        what: Context,
        who: AgentId,
    },
    HasProfile {
        profile: Profile,
        aid: AgentId,
    },
    /// The `Provide` action.
    Provide {
        product: Product,
        aid: AgentId,
    },
}

impl Predicate {
    pub fn kind(&self) -> &'static str {
        match self {
            Predicate::HasLocation { .. } => "HasLocation",
            Predicate::HasServices { .. } => "HasServices",
            Predicate::IsProvider { .. } => "isProvider",
            Predicate::HasContext { .. } => "HasContext",
            Predicate::HasProfile { .. } => "HasProfile",
            Predicate::Provide { .. } => "Provide",
        }
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_content(self))
    }
}

// ---------------------------------------------------------------------------
// Rendering

pub fn render_content(p: &Predicate) -> String {
    let mut out = String::new();
    match p {
        Predicate::HasLocation { place, site, aid } => {
            out.push_str("HasLocation (");
            render_place(&mut out, place);
            out.push_str("; ");
            render_site(&mut out, site);
            out.push_str(&format!(" ; AID: {aid} )"));
        }
        Predicate::HasServices {
            place,
            site,
            services,
        } => {
            out.push_str("HasServices (");
            render_place(&mut out, place);
            out.push_str("; ");
            render_site(&mut out, site);
            out.push_str(" ; Services (");
            for (i, s) in services.iter().enumerate() {
                if i > 0 {
                    out.push_str(" ;");
                }
                out.push(' ');
                render_service(&mut out, s);
            }
            out.push_str(" ) )");
        }
        Predicate::IsProvider {
            place,
            site,
            aid,
            service,
        } => {
            out.push_str("isProvider (");
            render_place(&mut out, place);
            out.push_str("; ");
            render_site(&mut out, site);
            out.push_str(&format!(" ; AID: {aid} ; "));
            render_service(&mut out, service);
            out.push_str(" )");
        }
        Predicate::HasContext { what, who } => {
            out.push_str("HasContext (");
            render_described(&mut out, "Context", &what.name, &what.characteristics);
            out.push_str(&format!(" ; Who: {who} )"));
        }
        Predicate::HasProfile { profile, aid } => {
            out.push_str("HasProfile (");
            render_described(&mut out, "Profile", &profile.name, &profile.to_features());
            out.push_str(&format!(" ; AID: {aid} )"));
        }
        Predicate::Provide { product, aid } => {
            out.push_str("Provide (");
            render_described(&mut out, "Product", &product.name, &product.characteristics);
            out.push_str(&format!(" ; AID: {aid} )"));
        }
    }
    out
}

fn render_place(out: &mut String, place: &Place) {
    out.push_str(&format!(
        "Place (Building {} ; Floor {})",
        place.building, place.floor
    ));
}

fn render_site(out: &mut String, site: &Site) {
    out.push_str("Position: ");
    if let Some(label) = &site.label {
        out.push_str(label);
        out.push(' ');
    }
    out.push_str(&format!("(patch {} {})", site.position.x, site.position.y));
}

fn render_service(out: &mut String, s: &Service) {
    out.push_str(&format!("Service (Name: {})", s.name));
}

fn render_described(out: &mut String, head: &str, name: &str, features: &[Feature]) {
    out.push_str(&format!("{head} (Name: {name} ; Characteristics:"));
    for (i, f) in features.iter().enumerate() {
        if i > 0 {
            out.push_str(" ;");
        }
        out.push_str(&format!(" {} {}", f.name, f.value));
    }
    out.push_str(" )");
}

// ---------------------------------------------------------------------------
// Parsing

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("empty content")]
    Empty,
    #[error("unexpected token `{token}` at byte {offset}, expected {expected}")]
    Unexpected {
        token: String,
        offset: usize,
        expected: String,
    },
    #[error("unexpected end of content, expected {expected}")]
    UnexpectedEnd { expected: String },
    #[error("invalid profile at byte {offset}: {source}")]
    Profile {
        offset: usize,
        #[source]
        source: ProfileError,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok<'a> {
    Word(&'a str),
    Open,
    Close,
    Semi,
    Colon,
}

impl Tok<'_> {
    fn text(&self) -> &str {
        match self {
            Tok::Word(w) => w,
            Tok::Open => "(",
            Tok::Close => ")",
            Tok::Semi => ";",
            Tok::Colon => ":",
        }
    }
}

fn tokenize(s: &str) -> Vec<(Tok<'_>, usize)> {
    let mut out = Vec::new();
    let bytes = s.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b'(' => out.push((Tok::Open, i)),
            b')' => out.push((Tok::Close, i)),
            b';' => out.push((Tok::Semi, i)),
            b':' => out.push((Tok::Colon, i)),
            c if c.is_ascii_whitespace() => {}
            _ => {
                let start = i;
                while i < bytes.len()
                    && !bytes[i].is_ascii_whitespace()
                    && !matches!(bytes[i], b'(' | b')' | b';' | b':')
                {
                    i += 1;
                }
                out.push((Tok::Word(&s[start..i]), start));
                continue;
            }
        }
        i += 1;
    }
    out
}

struct Parser<'a> {
    toks: Vec<(Tok<'a>, usize)>,
    at: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok<'a>> {
        self.toks.get(self.at).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.toks
            .get(self.at)
            .map(|(_, o)| *o)
            .unwrap_or(usize::MAX)
    }

    fn fail<T>(&self, expected: &str) -> Result<T, ParseError> {
        match self.toks.get(self.at) {
            Some((t, offset)) => Err(ParseError::Unexpected {
                token: t.text().to_string(),
                offset: *offset,
                expected: expected.to_string(),
            }),
            None => Err(ParseError::UnexpectedEnd {
                expected: expected.to_string(),
            }),
        }
    }

    fn expect(&mut self, tok: Tok<'_>) -> Result<(), ParseError> {
        if self.peek() == Some(&tok) {
            self.at += 1;
            Ok(())
        } else {
            self.fail(&format!("`{}`", tok.text()))
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        match self.peek() {
            Some(Tok::Word(w)) if *w == kw => {
                self.at += 1;
                Ok(())
            }
            _ => self.fail(&format!("`{kw}`")),
        }
    }

    /// `Key:` label.
    fn label(&mut self, kw: &str) -> Result<(), ParseError> {
        self.keyword(kw)?;
        self.expect(Tok::Colon)
    }

    fn word(&mut self, what: &str) -> Result<&'a str, ParseError> {
        match self.peek() {
            Some(Tok::Word(w)) => {
                let w = *w;
                self.at += 1;
                Ok(w)
            }
            _ => self.fail(what),
        }
    }

    fn number<T: std::str::FromStr>(&mut self, what: &str) -> Result<T, ParseError> {
        match self.peek() {
            Some(Tok::Word(w)) => match w.parse::<T>() {
                Ok(v) => {
                    self.at += 1;
                    Ok(v)
                }
                Err(_) => self.fail(what),
            },
            _ => self.fail(what),
        }
    }

    fn aid(&mut self) -> Result<AgentId, ParseError> {
        self.label("AID")?;
        Ok(AgentId(self.number("agent id")?))
    }

    fn place(&mut self) -> Result<Place, ParseError> {
        self.keyword("Place")?;
        self.expect(Tok::Open)?;
        self.keyword("Building")?;
        let building = self.word("building name")?.to_string();
        self.expect(Tok::Semi)?;
        self.keyword("Floor")?;
        let floor = self.number("floor number")?;
        self.expect(Tok::Close)?;
        Ok(Place { building, floor })
    }

    fn site(&mut self) -> Result<Site, ParseError> {
        self.label("Position")?;
        let label = match self.peek() {
            Some(Tok::Word(w)) => {
                let w = w.to_string();
                self.at += 1;
                Some(w)
            }
            _ => None,
        };
        self.expect(Tok::Open)?;
        self.keyword("patch")?;
        let x = self.number("x coordinate")?;
        let y = self.number("y coordinate")?;
        self.expect(Tok::Close)?;
        Ok(Site {
            label,
            position: Position { x, y },
        })
    }

    fn service(&mut self) -> Result<Service, ParseError> {
        self.keyword("Service")?;
        self.expect(Tok::Open)?;
        self.label("Name")?;
        let name = self.word("service name")?.to_string();
        self.expect(Tok::Close)?;
        Ok(Service { name })
    }

    fn described(&mut self, head: &str) -> Result<(String, Vec<Feature>), ParseError> {
        self.keyword(head)?;
        self.expect(Tok::Open)?;
        self.label("Name")?;
        let name = self.word("name")?.to_string();
        self.expect(Tok::Semi)?;
        self.label("Characteristics")?;
        let mut features = Vec::new();
        if self.peek() != Some(&Tok::Close) {
            loop {
                let fname = self.word("feature name")?.to_string();
                let value = self.word("feature value")?.to_string();
                features.push(Feature { name: fname, value });
                if self.peek() == Some(&Tok::Semi) {
                    self.at += 1;
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::Close)?;
        Ok((name, features))
    }

    fn predicate(&mut self) -> Result<Predicate, ParseError> {
        let head = self.word("predicate name")?;
        self.expect(Tok::Open)?;
        let p = match head {
            "HasLocation" => {
                let place = self.place()?;
                self.expect(Tok::Semi)?;
                let site = self.site()?;
                self.expect(Tok::Semi)?;
                let aid = self.aid()?;
                Predicate::HasLocation { place, site, aid }
            }
            "HasServices" => {
                let place = self.place()?;
                self.expect(Tok::Semi)?;
                let site = self.site()?;
                self.expect(Tok::Semi)?;
                self.keyword("Services")?;
                self.expect(Tok::Open)?;
                let mut services = Vec::new();
                if self.peek() != Some(&Tok::Close) {
                    loop {
                        services.push(self.service()?);
                        if self.peek() == Some(&Tok::Semi) {
                            self.at += 1;
                        } else {
                            break;
                        }
                    }
                }
                self.expect(Tok::Close)?;
                Predicate::HasServices {
                    place,
                    site,
                    services,
                }
            }
            "isProvider" => {
                let place = self.place()?;
                self.expect(Tok::Semi)?;
                let site = self.site()?;
                self.expect(Tok::Semi)?;
                let aid = self.aid()?;
                self.expect(Tok::Semi)?;
                let service = self.service()?;
                Predicate::IsProvider {
                    place,
                    site,
                    aid,
                    service,
                }
            }
            "HasContext" => {
                let (name, characteristics) = self.described("Context")?;
                self.expect(Tok::Semi)?;
                self.label("Who")?;
                let who = AgentId(self.number("agent id")?);
                Predicate::HasContext {
                    what: Context {
                        name,
                        characteristics,
                    },
                    who,
                }
            }
            "HasProfile" => {
                let offset = self.offset();
                let (name, features) = self.described("Profile")?;
                let profile = Profile::from_features(&name, &features)
                    .map_err(|source| ParseError::Profile { offset, source })?;
                self.expect(Tok::Semi)?;
                let aid = self.aid()?;
                Predicate::HasProfile { profile, aid }
            }
            "Provide" => {
                let (name, characteristics) = self.described("Product")?;
                self.expect(Tok::Semi)?;
                let aid = self.aid()?;
                Predicate::Provide {
                    product: Product {
                        name,
                        characteristics,
                    },
                    aid,
                }
            }
            _ => {
                self.at -= 2;
                return self.fail("predicate name");
            }
        };
        self.expect(Tok::Close)?;
        Ok(p)
    }
}

pub fn parse_content(s: &str) -> Result<Predicate, ParseError> {
    let toks = tokenize(s);
    if toks.is_empty() {
        return Err(ParseError::Empty);
    }
    let mut parser = Parser { toks, at: 0 };
    let p = parser.predicate()?;
    if parser.peek().is_some() {
        return parser.fail("end of content");
    }
    Ok(p)
}
