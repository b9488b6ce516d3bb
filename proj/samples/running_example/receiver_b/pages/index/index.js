Page({
  handleMsg(event) {
    if (event.detail.phone) {
      console.log(event.detail.phone);
    }
  }
});
