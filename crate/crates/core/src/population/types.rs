use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Declares a fieldless enum with a fixed snake_case text form used by the
/// CSV schemas and config files.
macro_rules! text_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(rename_all = "snake_case")]
        pub enum $name { $($variant),+ }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self { $($name::$variant => $text),+ }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, String> {
                match s {
                    $($text => Ok($name::$variant),)+
                    other => Err(format!(
                        "unknown {} value {:?}", stringify!($name), other
                    )),
                }
            }
        }
    };
}

text_enum!(Sex {
    Female => "female",
    Male => "male",
});

text_enum!(
    /// Single-race categories; Hispanic origin is carried separately.
    Race {
        White => "white",
        Black => "black",
        Indigenous => "indigenous",
        Asian => "asian",
        PacificIslander => "pacific_islander",
        Other => "other",
        Multiracial => "multiracial",
    }
);

text_enum!(MilitaryStatus {
    ActiveDuty => "active_duty",
    ReserveOrGuard => "reserve_or_guard",
    Veteran => "veteran",
    Never => "never",
});

text_enum!(
    /// Highest educational attainment, coarsened to what the deprivation
    /// components need.
    Education {
        BelowGrade9 => "below_grade9",
        SomeHighSchool => "some_high_school",
        HighSchoolOrMore => "high_school_or_more",
    }
);

text_enum!(Employment {
    Employed => "employed",
    Unemployed => "unemployed",
    NotInLaborForce => "not_in_labor_force",
    ArmedForces => "armed_forces",
});

impl Race {
    pub fn is_black_or_indigenous(self) -> bool {
        matches!(self, Race::Black | Race::Indigenous)
    }
}

/// Two-letter state (or district) postal code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct StateCode([u8; 2]);

impl StateCode {
    pub fn new(code: &str) -> Result<Self, String> {
        let b = code.as_bytes();
        if b.len() == 2 && b.iter().all(u8::is_ascii_uppercase) {
            Ok(Self([b[0], b[1]]))
        } else {
            Err(format!("invalid state code {code:?}"))
        }
    }

    pub fn as_str(&self) -> &str {
        // constructor guarantees ASCII
        std::str::from_utf8(&self.0).unwrap_or("??")
    }
}

impl fmt::Display for StateCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl TryFrom<String> for StateCode {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        StateCode::new(&s)
    }
}

impl From<StateCode> for String {
    fn from(s: StateCode) -> String {
        s.as_str().to_owned()
    }
}

/// One weighted microdata row.
///
/// The trailing `education`, `employment` and `personal_income` fields are
/// only consulted by the deprivation components and may be absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersonRecord {
    pub person_id: String,
    /// Absent for group-quarters residents.
    pub household_id: Option<String>,
    /// Persons represented by this row.
    pub weight: f64,
    pub age: u16,
    pub sex: Sex,
    pub race: Race,
    pub hispanic: bool,
    pub industry_code: Option<String>,
    pub occupation_code: Option<String>,
    pub military_status: Option<MilitaryStatus>,
    pub gave_birth_past_year: bool,
    pub group_quarters: bool,
    pub state: StateCode,
    pub education: Option<Education>,
    pub employment: Option<Employment>,
    pub personal_income: Option<f64>,
}

impl PersonRecord {
    pub fn is_black_or_indigenous(&self) -> bool {
        self.race.is_black_or_indigenous()
    }

    pub fn is_black_indigenous_or_hispanic(&self) -> bool {
        self.race.is_black_or_indigenous() || self.hispanic
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HouseholdRecord {
    pub household_id: String,
    /// Constant dollars; present only when the household contains a family.
    pub family_income: Option<f64>,
    pub property_value: Option<f64>,
    /// Monthly.
    pub gross_rent: Option<f64>,
    /// Monthly first-mortgage payment.
    pub first_mortgage: Option<f64>,
    pub owner_occupied: bool,
    pub vehicle_available: bool,
    pub telephone_or_data: bool,
    pub complete_plumbing: bool,
    pub persons_count: u32,
    pub rooms_count: u32,
    pub single_parent_with_children: bool,
    /// Family income as a percentage of the poverty threshold.
    pub poverty_ratio: Option<f64>,
}

impl HouseholdRecord {
    pub fn validate(&self) -> Result<(), String> {
        if self.persons_count < 1 {
            return Err("persons_count must be at least 1".into());
        }
        if self.owner_occupied && self.gross_rent.is_some() {
            return Err("owner-occupied household has gross_rent".into());
        }
        if !self.owner_occupied && (self.property_value.is_some() || self.first_mortgage.is_some())
        {
            return Err("renter household has property_value or first_mortgage".into());
        }
        for (name, v) in [
            ("family_income", self.family_income),
            ("property_value", self.property_value),
            ("gross_rent", self.gross_rent),
            ("first_mortgage", self.first_mortgage),
            ("poverty_ratio", self.poverty_ratio),
        ] {
            if let Some(v) = v {
                if !v.is_finite() {
                    return Err(format!("{name} is not finite"));
                }
            }
        }
        Ok(())
    }
}
