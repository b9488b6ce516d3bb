Page({
  data: {
    host: ''
  },

  getPhoneNumber(args) {
    let host;
    host = "https://h5.example.com/index.html?number=" + args.detail.userInfo.phonenumber;
    this.setData({ host });
  }
});
