use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ModelConfig;

/// Row-major dense table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    rows: usize,
    dim: usize,
    data: Vec<f64>,
}

impl Table {
    pub fn zeros(rows: usize, dim: usize) -> Self {
        Self {
            rows,
            dim,
            data: vec![0.0; rows * dim],
        }
    }

    pub fn from_vec(rows: usize, dim: usize, data: Vec<f64>) -> Self {
        assert_eq!(
            data.len(),
            rows * dim,
            "table data does not match its shape"
        );
        Self { rows, dim, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.dim..(r + 1) * self.dim]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.dim..(r + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// `self · x` for a square or rectangular table viewed as a matrix.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|r| crate::math::dot(self.row(r), x))
            .collect()
    }
}

/// Which table a parameter row belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Param {
    Word,
    User,
    Item,
    AspectWord,
    ValuePos,
    ValueNeg,
    QueryW,
    QueryB,
    AspectW,
    AspectB,
}

impl Param {
    /// Embedding tables covered by the L2 penalty.
    pub fn regularized(self) -> bool {
        matches!(
            self,
            Param::Word
                | Param::User
                | Param::Item
                | Param::AspectWord
                | Param::ValuePos
                | Param::ValueNeg
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabSizes {
    pub words: usize,
    pub users: usize,
    pub items: usize,
    pub aspect_words: usize,
    pub values: usize,
}

impl VocabSizes {
    pub fn of(corpus: &crate::corpus::Corpus) -> Self {
        Self {
            words: corpus.words.len(),
            users: corpus.users.len(),
            items: corpus.items.len(),
            aspect_words: corpus.aspect_words.len(),
            values: corpus.values.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub word: Table,
    pub user: Table,
    pub item: Table,
    pub aspect_word: Table,
    pub value_pos: Table,
    /// Absent when negative values are scored as the complement of positives.
    pub value_neg: Option<Table>,
    pub query_w: Table,
    /// Single-row table.
    pub query_b: Table,
    /// Absent when aspects share the query projection.
    pub aspect_w: Option<Table>,
    pub aspect_b: Option<Table>,
}

impl ModelParams {
    pub fn zeros(config: &ModelConfig, sizes: VocabSizes) -> Self {
        let d = config.dim;
        let own_aspect_proj = !config.share_query_aspect_projection;
        Self {
            word: Table::zeros(sizes.words, d),
            user: Table::zeros(sizes.users, d),
            item: Table::zeros(sizes.items, d),
            aspect_word: Table::zeros(sizes.aspect_words, d),
            value_pos: Table::zeros(sizes.values, d),
            value_neg: (!config.negative_is_complement()).then(|| Table::zeros(sizes.values, d)),
            query_w: Table::zeros(d, d),
            query_b: Table::zeros(1, d),
            aspect_w: own_aspect_proj.then(|| Table::zeros(d, d)),
            aspect_b: own_aspect_proj.then(|| Table::zeros(1, d)),
        }
    }

    /// Every entry uniform in `[-0.5/d, 0.5/d]`, drawn table by table in
    /// declaration order.
    pub fn init(config: &ModelConfig, sizes: VocabSizes, seed: u64) -> Self {
        let mut p = Self::zeros(config, sizes);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bound = 0.5 / config.dim as f64;
        for t in p.tables_mut() {
            for x in t.as_mut_slice() {
                *x = rng.gen_range(-bound..=bound);
            }
        }
        p
    }

    pub fn dim(&self) -> usize {
        self.word.dim()
    }

    pub fn sizes(&self) -> VocabSizes {
        VocabSizes {
            words: self.word.rows(),
            users: self.user.rows(),
            items: self.item.rows(),
            aspect_words: self.aspect_word.rows(),
            values: self.value_pos.rows(),
        }
    }

    pub fn table(&self, p: Param) -> Option<&Table> {
        match p {
            Param::Word => Some(&self.word),
            Param::User => Some(&self.user),
            Param::Item => Some(&self.item),
            Param::AspectWord => Some(&self.aspect_word),
            Param::ValuePos => Some(&self.value_pos),
            Param::ValueNeg => self.value_neg.as_ref(),
            Param::QueryW => Some(&self.query_w),
            Param::QueryB => Some(&self.query_b),
            Param::AspectW => self.aspect_w.as_ref(),
            Param::AspectB => self.aspect_b.as_ref(),
        }
    }

    pub fn table_mut(&mut self, p: Param) -> Option<&mut Table> {
        match p {
            Param::Word => Some(&mut self.word),
            Param::User => Some(&mut self.user),
            Param::Item => Some(&mut self.item),
            Param::AspectWord => Some(&mut self.aspect_word),
            Param::ValuePos => Some(&mut self.value_pos),
            Param::ValueNeg => self.value_neg.as_mut(),
            Param::QueryW => Some(&mut self.query_w),
            Param::QueryB => Some(&mut self.query_b),
            Param::AspectW => self.aspect_w.as_mut(),
            Param::AspectB => self.aspect_b.as_mut(),
        }
    }

    /// Present tables in file order.
    pub fn tables(&self) -> Vec<&Table> {
        let mut v = vec![
            &self.word,
            &self.user,
            &self.item,
            &self.aspect_word,
            &self.value_pos,
        ];
        v.extend(self.value_neg.as_ref());
        v.push(&self.query_w);
        v.push(&self.query_b);
        v.extend(self.aspect_w.as_ref());
        v.extend(self.aspect_b.as_ref());
        v
    }

    pub fn tables_mut(&mut self) -> Vec<&mut Table> {
        let mut v = vec![
            &mut self.word,
            &mut self.user,
            &mut self.item,
            &mut self.aspect_word,
            &mut self.value_pos,
        ];
        v.extend(self.value_neg.as_mut());
        v.push(&mut self.query_w);
        v.push(&mut self.query_b);
        v.extend(self.aspect_w.as_mut());
        v.extend(self.aspect_b.as_mut());
        v
    }

    pub fn is_finite(&self) -> bool {
        self.tables()
            .iter()
            .all(|t| t.as_slice().iter().all(|x| x.is_finite()))
    }

    /// FNV-1a over the bit patterns of every entry.
    pub fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for t in self.tables() {
            for x in t.as_slice() {
                for b in x.to_bits().to_le_bytes() {
                    h ^= b as u64;
                    h = h.wrapping_mul(0x0100_0000_01b3);
                }
            }
        }
        h
    }

    /// Mean user embedding, used for anonymous sessions.
    pub fn mean_user(&self) -> Vec<f64> {
        let d = self.dim();
        let mut m = vec![0.0; d];
        for u in 0..self.user.rows() {
            crate::math::axpy(1.0, self.user.row(u), &mut m);
        }
        if self.user.rows() > 0 {
            let n = self.user.rows() as f64;
            m.iter_mut().for_each(|x| *x /= n);
        }
        m
    }
}
