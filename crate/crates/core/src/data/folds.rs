use super::{DataError, Dataset};

/// One leave-one-animal-out split: `test_id` is held out, `train_ids` are
/// every other animal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fold {
    pub index: usize,
    pub test_id: String,
    pub train_ids: Vec<String>,
}

impl Fold {
    pub fn train_set(&self, dataset: &Dataset) -> Dataset {
        dataset.filter(|s| s.animal_id != self.test_id)
    }

    pub fn test_set(&self, dataset: &Dataset) -> Dataset {
        dataset.filter(|s| s.animal_id == self.test_id)
    }
}

/// One fold per distinct animal, ordered by sorted animal id.
pub fn loao_folds(dataset: &Dataset) -> Result<Vec<Fold>, DataError> {
    let ids = dataset.animal_ids();
    if ids.len() < 2 {
        return Err(DataError::Invalid(format!(
            "leave-one-animal-out needs at least 2 animals, found {}",
            ids.len()
        )));
    }
    Ok(ids
        .iter()
        .enumerate()
        .map(|(index, test_id)| Fold {
            index,
            test_id: test_id.clone(),
            train_ids: ids.iter().filter(|id| *id != test_id).cloned().collect(),
        })
        .collect())
}
